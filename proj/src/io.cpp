#include "gffdrift/io.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include <openssl/evp.h>

#include "gffdrift/errors.hpp"

namespace gffdrift {

nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<char> buf(1 << 16);
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
}

struct CsvWriter::Impl {
    std::ofstream out;
    std::size_t width;
};

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : impl_(new Impl) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("cannot open " + path + " for writing");
    }
    impl_->out.imbue(std::locale::classic());
    impl_->out << std::setprecision(17);
    impl_->width = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) impl_->out << (i ? "," : "") << header[i];
    impl_->out << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
    if (values.size() != impl_->width) throw std::logic_error("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < values.size(); ++i) impl_->out << (i ? "," : "") << values[i];
    impl_->out << '\n';
}

void CsvWriter::close() { impl_->out.close(); }

CsvWriter::~CsvWriter() { delete impl_; }

int CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

CsvTable read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path + ": empty CSV");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw ConfigError(path + ": non-numeric cell '" + cell + "'");
            }
        }
        if (row.size() != t.header.size()) throw ConfigError(path + ": ragged row");
        t.rows.push_back(std::move(row));
    }
    return t;
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

RunManifest::RunManifest(nlohmann::json config) : config_(std::move(config)), started_(utc_timestamp()) {}

void RunManifest::add_input(const std::string& path) { inputs_.push_back(path); }

void RunManifest::add_output(const std::string& path, const std::string& producer, nlohmann::json columns) {
    outputs_.push_back({path, producer, std::move(columns)});
}

void RunManifest::set(const std::string& key, nlohmann::json value) { extra_[key] = std::move(value); }

void RunManifest::write(const std::string& dir) {
    nlohmann::json j;
    j["config"] = config_;
    j["code_version"] = GFFDRIFT_VERSION;
    j["started"] = started_;
    j["finished"] = utc_timestamp();
    nlohmann::json ins = nlohmann::json::array();
    for (const auto& p : inputs_) ins.push_back({{"file", p}, {"sha256", sha256_file(p)}});
    j["inputs"] = ins;
    nlohmann::json outs = nlohmann::json::array();
    for (const auto& e : outputs_) {
        nlohmann::json o{{"file", std::filesystem::path(e.file).filename().string()},
                         {"sha256", sha256_file(e.file)},
                         {"bytes", std::filesystem::file_size(e.file)},
                         {"producer", e.producer}};
        if (!e.columns.is_null()) o["columns"] = e.columns;
        outs.push_back(std::move(o));
    }
    j["outputs"] = outs;
    for (auto it = extra_.begin(); it != extra_.end(); ++it) j[it.key()] = it.value();
    write_json((std::filesystem::path(dir) / "manifest.json").string(), j);
}

} // namespace gffdrift
