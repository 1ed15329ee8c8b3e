// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_CLI_CONFIG_HPP
#define RIS_CLI_CONFIG_HPP

#include "ris/locsense.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ris::cli
{
    using Json = nlohmann::ordered_json;

    // Invalid or missing configuration value; message names the offending field
    class ConfigError : public std::runtime_error
    {
    public:
        ConfigError(const std::string &field, const std::string &what);
        const std::string &field() const { return field_; }

    private:
        std::string field_;
    };

    // Read-only view of a JSON object with a dotted path for error messages.
    // A numeric key may carry a unit suffix: "x_db", "x_dbm", "x_deg", "x_ns", "x_us", "x_khz", "x_mhz",
    // "x_ghz". Values are returned in linear units, W, rad, s and Hz respectively.
    class Node
    {
    public:
        Node(const Json &j, std::string path);

        bool has(const std::string &key) const;
        double number(const std::string &key) const;
        double number(const std::string &key, double fallback) const;
        double positive(const std::string &key) const;
        double positive(const std::string &key, double fallback) const;
        std::size_t count(const std::string &key) const;
        std::size_t count(const std::string &key, std::size_t fallback) const;
        bool flag(const std::string &key, bool fallback) const;
        std::string text(const std::string &key) const;
        loc::Vec2 vec2(const std::string &key) const;
        Eigen::Vector3d vec3(const std::string &key) const;
        std::vector<double> numbers(const std::string &key) const;
        Node child(const std::string &key) const;
        std::vector<Node> items(const std::string &key) const;
        std::vector<std::string> keys() const;

        const Json &raw() const { return *j_; }
        const std::string &path() const { return path_; }
        std::string field(const std::string &key) const;

    private:
        // Key actually present (with suffix) and the factor to linear units
        const Json *find_number(const std::string &key, std::string &found, int &unit) const;

        const Json *j_;
        std::string path_;
    };

    struct Sweep
    {
        std::string axis;
        std::vector<Json> values;     // Numbers or strings

        std::vector<double> numbers() const;     // Throws ConfigError if a value is not numeric
        std::vector<std::string> labels() const; // Throws ConfigError if a value is not a string
    };

    struct ExperimentConfig
    {
        std::string id;
        std::uint64_t seed = 0;
        std::string output;   // Output directory, relative to the working directory
        Sweep sweep;
        Json doc;
        std::string source;   // File name or "<string>" for messages

        Node root() const { return Node(doc, ""); }
    };

    // Parses and checks the common fields: id, seed, output and sweep
    ExperimentConfig parse_config(const std::string &text, const std::string &source = "<string>");
    ExperimentConfig load_config(const std::filesystem::path &file);

    const std::vector<std::string> &experiment_ids();
}

#endif
