#pragma once

#include <string>
#include <vector>

#include "json.hpp"

namespace gffdrift {

nlohmann::json read_json(const std::string& path);
void write_json(const std::string& path, const nlohmann::json& j);

/// Hex SHA-256 of the file contents.
std::string sha256_file(const std::string& path);

/// Numeric CSV table: mandatory header, '.' decimals, '\n' line ends,
/// round-trip precision.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<double>& values);
    void close();
    ~CsvWriter();

private:
    struct Impl;
    Impl* impl_;
};

/// Parsed CSV with a header line; all cells numeric.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& path);

struct ManifestEntry {
    std::string file;
    std::string producer;
    nlohmann::json columns;  // column -> description
};

/// Record of a run: config snapshot, version, timestamps, hashed outputs.
class RunManifest {
public:
    explicit RunManifest(nlohmann::json config);
    void add_input(const std::string& path);
    void add_output(const std::string& path, const std::string& producer, nlohmann::json columns = {});
    void set(const std::string& key, nlohmann::json value);
    /// Hashes every listed file and writes manifest.json into `dir`.
    void write(const std::string& dir);

private:
    nlohmann::json config_;
    nlohmann::json extra_ = nlohmann::json::object();
    std::vector<std::string> inputs_;
    std::vector<ManifestEntry> outputs_;
    std::string started_;
};

std::string utc_timestamp();

} // namespace gffdrift
