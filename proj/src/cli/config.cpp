// SPDX-License-Identifier: Apache-2.0

#include "ris/cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ris::cli
{
    namespace
    {
        struct Unit
        {
            const char *suffix;
            int kind;
        };

        // kind: 0 none, 1 dB, 2 dBm, 3 deg, 4 ns, 5 us, 6 kHz, 7 MHz, 8 GHz
        constexpr Unit units[] = {{"", 0},     {"_db", 1},  {"_dbm", 2}, {"_deg", 3}, {"_ns", 4},
                                  {"_us", 5},  {"_khz", 6}, {"_mhz", 7}, {"_ghz", 8}};

        double to_linear(double v, int kind)
        {
            switch (kind)
            {
            case 1: return db_to_lin(v);
            case 2: return dbm_to_watt(v);
            case 3: return v * pi / 180.0;
            case 4: return v * 1e-9;
            case 5: return v * 1e-6;
            case 6: return v * 1e3;
            case 7: return v * 1e6;
            case 8: return v * 1e9;
            default: return v;
            }
        }

        std::string join(const std::string &path, const std::string &key)
        {
            return path.empty() ? key : path + "." + key;
        }

        std::string line_col(const std::string &text, std::size_t byte)
        {
            std::size_t line = 1, col = 1;
            for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i)
            {
                if (text[i] == '\n')
                {
                    ++line;
                    col = 1;
                }
                else
                    ++col;
            }
            return "line " + std::to_string(line) + ", column " + std::to_string(col);
        }
    }

    ConfigError::ConfigError(const std::string &field, const std::string &what)
        : std::runtime_error(field.empty() ? what : "field '" + field + "': " + what), field_(field)
    {
    }

    Node::Node(const Json &j, std::string path) : j_(&j), path_(std::move(path))
    {
        if (!j.is_object())
            throw ConfigError(path_, "expected an object");
    }

    std::string Node::field(const std::string &key) const { return join(path_, key); }

    const Json *Node::find_number(const std::string &key, std::string &found, int &unit) const
    {
        const Json *hit = nullptr;
        for (const Unit &u : units)
        {
            std::string k = key + u.suffix;
            auto it = j_->find(k);
            if (it == j_->end())
                continue;
            if (hit)
                throw ConfigError(field(k), "conflicts with '" + field(found) + "'");
            hit = &*it;
            found = k;
            unit = u.kind;
        }
        return hit;
    }

    bool Node::has(const std::string &key) const
    {
        std::string found;
        int unit = 0;
        return j_->contains(key) || find_number(key, found, unit) != nullptr;
    }

    double Node::number(const std::string &key) const
    {
        std::string found;
        int unit = 0;
        const Json *v = find_number(key, found, unit);
        if (!v)
            throw ConfigError(field(key), "missing required number");
        if (!v->is_number())
            throw ConfigError(field(found), "expected a number");
        double x = to_linear(v->get<double>(), unit);
        if (!std::isfinite(x))
            throw ConfigError(field(found), "value is not finite");
        return x;
    }

    double Node::number(const std::string &key, double fallback) const
    {
        return has(key) ? number(key) : fallback;
    }

    double Node::positive(const std::string &key) const
    {
        double x = number(key);
        if (!(x > 0.0))
            throw ConfigError(field(key), "expected a positive value");
        return x;
    }

    double Node::positive(const std::string &key, double fallback) const
    {
        return has(key) ? positive(key) : fallback;
    }

    std::size_t Node::count(const std::string &key) const
    {
        auto it = j_->find(key);
        if (it == j_->end())
            throw ConfigError(field(key), "missing required integer");
        if (!it->is_number_integer() || (it->is_number_integer() && it->get<long long>() < 0))
            throw ConfigError(field(key), "expected a non-negative integer");
        return it->get<std::size_t>();
    }

    std::size_t Node::count(const std::string &key, std::size_t fallback) const
    {
        return j_->contains(key) ? count(key) : fallback;
    }

    bool Node::flag(const std::string &key, bool fallback) const
    {
        auto it = j_->find(key);
        if (it == j_->end())
            return fallback;
        if (!it->is_boolean())
            throw ConfigError(field(key), "expected true or false");
        return it->get<bool>();
    }

    std::string Node::text(const std::string &key) const
    {
        auto it = j_->find(key);
        if (it == j_->end())
            throw ConfigError(field(key), "missing required string");
        if (!it->is_string())
            throw ConfigError(field(key), "expected a string");
        return it->get<std::string>();
    }

    std::vector<double> Node::numbers(const std::string &key) const
    {
        std::string found;
        int unit = 0;
        const Json *v = find_number(key, found, unit);
        if (!v)
            throw ConfigError(field(key), "missing required array");
        if (!v->is_array())
            throw ConfigError(field(found), "expected an array of numbers");
        std::vector<double> out;
        for (const auto &e : *v)
        {
            if (!e.is_number())
                throw ConfigError(field(found), "expected an array of numbers");
            out.push_back(to_linear(e.get<double>(), unit));
        }
        return out;
    }

    loc::Vec2 Node::vec2(const std::string &key) const
    {
        auto v = numbers(key);
        if (v.size() != 2)
            throw ConfigError(field(key), "expected two coordinates");
        return {v[0], v[1]};
    }

    Eigen::Vector3d Node::vec3(const std::string &key) const
    {
        auto v = numbers(key);
        if (v.size() != 3)
            throw ConfigError(field(key), "expected three coordinates");
        return {v[0], v[1], v[2]};
    }

    Node Node::child(const std::string &key) const
    {
        auto it = j_->find(key);
        if (it == j_->end())
            throw ConfigError(field(key), "missing required object");
        if (!it->is_object())
            throw ConfigError(field(key), "expected an object");
        return Node(*it, field(key));
    }

    std::vector<Node> Node::items(const std::string &key) const
    {
        auto it = j_->find(key);
        if (it == j_->end())
            throw ConfigError(field(key), "missing required array");
        if (!it->is_array())
            throw ConfigError(field(key), "expected an array of objects");
        std::vector<Node> out;
        for (std::size_t i = 0; i < it->size(); ++i)
        {
            const Json &e = (*it)[i];
            std::string p = field(key) + "[" + std::to_string(i) + "]";
            if (!e.is_object())
                throw ConfigError(p, "expected an object");
            out.emplace_back(e, p);
        }
        return out;
    }

    std::vector<std::string> Node::keys() const
    {
        std::vector<std::string> out;
        for (auto it = j_->begin(); it != j_->end(); ++it)
            out.push_back(it.key());
        return out;
    }

    std::vector<double> Sweep::numbers() const
    {
        std::vector<double> out;
        for (const auto &v : values)
        {
            if (!v.is_number())
                throw ConfigError("sweep.values", "axis '" + axis + "' expects numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }

    std::vector<std::string> Sweep::labels() const
    {
        std::vector<std::string> out;
        for (const auto &v : values)
        {
            if (!v.is_string())
                throw ConfigError("sweep.values", "axis '" + axis + "' expects names");
            out.push_back(v.get<std::string>());
        }
        return out;
    }

    const std::vector<std::string> &experiment_ids()
    {
        static const std::vector<std::string> ids = {"narrowband_capacity", "wideband_rate", "loc_offline",
                                                      "loc_online",          "loc_solve",     "estimation",
                                                      "mobility"};
        return ids;
    }

    ExperimentConfig parse_config(const std::string &text, const std::string &source)
    {
        ExperimentConfig cfg;
        cfg.source = source;
        try
        {
            cfg.doc = Json::parse(text);
        }
        catch (const nlohmann::json::parse_error &e)
        {
            std::string msg = e.what();
            auto pos = msg.find("syntax error");
            throw ConfigError("", source + ": " + line_col(text, e.byte) + ": " +
                                      (pos == std::string::npos ? msg : msg.substr(pos)));
        }
        if (!cfg.doc.is_object())
            throw ConfigError("", source + ": top level must be an object");
        Node root(cfg.doc, "");

        cfg.id = root.text("experiment");
        const auto &ids = experiment_ids();
        if (std::find(ids.begin(), ids.end(), cfg.id) == ids.end())
            throw ConfigError("experiment", "unknown experiment '" + cfg.id + "'");

        auto seed = cfg.doc.find("seed");
        if (seed == cfg.doc.end())
            throw ConfigError("seed", "missing required integer");
        if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<long long>() >= 0))
            throw ConfigError("seed", "expected a non-negative integer");
        cfg.seed = seed->get<std::uint64_t>();

        cfg.output = cfg.doc.contains("output") ? root.text("output") : "out/" + cfg.id;

        Node sw = root.child("sweep");
        cfg.sweep.axis = sw.text("axis");
        if (sw.raw().contains("values"))
        {
            const Json &v = sw.raw()["values"];
            if (!v.is_array())
                throw ConfigError("sweep.values", "expected an array");
            for (const auto &e : v)
            {
                if (!e.is_number() && !e.is_string())
                    throw ConfigError("sweep.values", "entries must be numbers or names");
                cfg.sweep.values.push_back(e);
            }
        }
        else if (sw.has("start"))
        {
            double start = sw.number("start"), stop = sw.number("stop"), step = sw.positive("step");
            if (stop < start)
                throw ConfigError("sweep.stop", "must not be below start");
            auto n = std::size_t(std::floor((stop - start) / step + 1e-9)) + 1;
            if (n > 1000000)
                throw ConfigError("sweep.step", "too many sweep points");
            for (std::size_t i = 0; i < n; ++i)
            {
                // Round away the accumulated binary error so that 0.05 * 13 prints as 0.65
                std::ostringstream os;
                os.precision(12);
                os << (start + double(i) * step);
                cfg.sweep.values.push_back(std::stod(os.str()));
            }
        }
        else
            throw ConfigError("sweep", "needs 'values' or 'start', 'stop' and 'step'");
        if (cfg.sweep.values.empty())
            throw ConfigError("sweep.values", "sweep is empty");
        return cfg;
    }

    ExperimentConfig load_config(const std::filesystem::path &file)
    {
        std::ifstream in(file);
        if (!in)
            throw ConfigError("", "cannot read config file " + file.string());
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str(), file.string());
    }
}
