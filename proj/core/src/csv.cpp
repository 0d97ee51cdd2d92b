#include "hugat/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hugat::csv {

int Table::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(field));
            field.clear();
        } else if (c != '\r') {
            field += c;
        }
    }
    out.push_back(std::move(field));
    return out;
}

}  // namespace

Table parse(const std::string& text) {
    Table t;
    std::istringstream in(text);
    std::string line;
    long line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_line(line);
        if (t.header.empty()) {
            t.header = std::move(fields);
        } else {
            t.rows.push_back(std::move(fields));
            t.line_numbers.push_back(line_no);
        }
    }
    return t;
}

Table read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile(path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    auto emit_row = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out << ',';
            if (fields[i].find_first_of(",\"\n") != std::string::npos) {
                out << '"';
                for (char c : fields[i]) {
                    if (c == '"') out << '"';
                    out << c;
                }
                out << '"';
            } else {
                out << fields[i];
            }
        }
        out << '\n';
    };
    emit_row(header);
    for (const auto& r : rows) emit_row(r);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_matrix(const std::string& path, const Matrix& m,
                  const std::vector<std::string>& header) {
    std::vector<std::string> h = header;
    if (h.empty()) {
        for (std::size_t j = 0; j < m.cols(); ++j) h.push_back("c" + std::to_string(j));
    }
    std::vector<std::vector<std::string>> rows(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) {
        rows[i].reserve(m.cols());
        for (std::size_t j = 0; j < m.cols(); ++j) rows[i].push_back(format_double(m(i, j)));
    }
    write_file(path, h, rows);
}

long parse_long(const std::string& s, long line) {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw SchemaViolation("not an integer: '" + s + "'", line);
    return v;
}

double parse_double(const std::string& s, long line) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw SchemaViolation("not a number: '" + s + "'", line);
    }
}

}  // namespace hugat::csv
