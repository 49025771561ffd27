#include "dnrr/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>

#include "dnrr/errors.hpp"

namespace dnrr::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace {

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (s.empty()) return false;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string trim(std::string s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

}  // namespace

std::vector<double> parse_list(const std::string& text, char sep) {
    std::vector<double> out;
    std::string t = trim(text);
    if (t.empty()) return out;
    std::stringstream ss(t);
    std::string item;
    while (std::getline(ss, item, sep)) {
        double v;
        if (!parse_double(item, v)) throw ContractViolation("cannot parse number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void write_trajectory(const fs::path& path, const Trajectory& traj) {
    std::ostringstream os;
    os << "# dnrr trajectory\n";
    os << "# n: " << traj.values.size() << "\n";
    os << "# initial: ";
    for (std::size_t k = 0; k < traj.initial.size(); ++k) os << (k ? ";" : "") << format_double(traj.initial[k]);
    os << "\n";
    for (const auto& [key, value] : traj.meta) {
        if (key == "n" || key == "initial") continue;
        os << "# " << key << ": " << value << "\n";
    }
    for (double v : traj.values) os << format_double(v) << "\n";
    write_text(path, os.str());
}

Trajectory read_trajectory(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trajectory file " + path.string());
    Trajectory traj;
    bool have_initial = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line[0] == '#') {
            auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            std::string key = trim(line.substr(1, colon - 1));
            std::string value = trim(line.substr(colon + 1));
            if (key == "initial") {
                try {
                    traj.initial = parse_list(value);
                } catch (const ContractViolation& e) {
                    throw ParseError(path.string(), lineno, e.what());
                }
                have_initial = true;
            } else if (key != "n") {
                traj.meta[key] = value;
            }
            continue;
        }
        double v;
        if (!parse_double(line, v) || !std::isfinite(v))
            throw ParseError(path.string(), lineno, "expected one finite number, got '" + line + "'");
        traj.values.push_back(v);
    }
    if (!have_initial) throw ParseError(path.string(), lineno, "missing '# initial:' header");
    return traj;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_matrix_csv(const fs::path& path, const std::vector<std::string>& columns, const Eigen::MatrixXd& rows) {
    if (static_cast<Eigen::Index>(columns.size()) != rows.cols())
        throw ContractViolation("write_matrix_csv: column count mismatch");
    std::string out;
    out.reserve(static_cast<std::size_t>(rows.size()) * 24 + 64);
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + csv_field(columns[c]);
    out += "\r\n";
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
        for (Eigen::Index c = 0; c < rows.cols(); ++c) {
            if (c) out += ',';
            out += format_double(rows(r, c));
        }
        out += "\r\n";
    }
    write_text(path, out);
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path, std::vector<std::string>* columns) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> names;
    {
        std::stringstream ss(line);
        std::string item;
        while (std::getline(ss, item, ',')) names.push_back(item);
    }
    std::vector<double> data;
    std::size_t nrows = 0, lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t count = 0, start = 0;
        while (true) {
            auto comma = line.find(',', start);
            std::string_view cell(line.data() + start,
                                  (comma == std::string::npos ? line.size() : comma) - start);
            double v;
            if (!parse_double(cell, v)) throw ParseError(path.string(), lineno, "bad number");
            data.push_back(v);
            ++count;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (count != names.size()) throw ParseError(path.string(), lineno, "wrong field count");
        ++nrows;
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(names.size()));
    for (std::size_t r = 0; r < nrows; ++r)
        for (std::size_t c = 0; c < names.size(); ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = data[r * names.size() + c];
    if (columns) *columns = std::move(names);
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string git_blob_hash(const std::string& content) {
    std::string header = "blob " + std::to_string(content.size());
    header.push_back('\0');
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr);
    EVP_DigestUpdate(ctx, header.data(), header.size());
    EVP_DigestUpdate(ctx, content.data(), content.size());
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
    return os.str();
}

}  // namespace dnrr::io
