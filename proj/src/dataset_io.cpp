#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aee/errors.hpp"
#include "aee/io.hpp"

namespace aee {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    if (!std::isfinite(v)) throw NumericalError("refusing to serialize a non-finite value");
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

double parse_double(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
        text.remove_suffix(1);
    }
    double v = 0.0;
    const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
    if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
        throw ParseError("not a number: '" + std::string(text) + "'");
    }
    return v;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out << text;
        if (!out) throw IoError("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> lines_of(const std::string& text) {
    std::vector<std::string_view> out;
    std::string_view rest(text);
    while (!rest.empty()) {
        const auto pos = rest.find('\n');
        auto line = rest.substr(0, pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!line.empty()) out.push_back(line);
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
    }
    return out;
}

Label parse_label(std::string_view s, std::size_t line) {
    if (s == "0") return Label::ok;
    if (s == "1") return Label::nok;
    throw ParseError("line " + std::to_string(line) + ": label must be 0 or 1, got '" +
                     std::string(s) + "'");
}

}  // namespace

std::string dataset_to_csv(const Dataset& data) {
    const std::size_t n = common_length(data);
    bool labeled = data.front().label.has_value();
    for (const auto& s : data) {
        if (s.label.has_value() != labeled) {
            throw DataError("dataset mixes labeled and unlabeled series");
        }
    }
    std::string out = "id";
    for (std::size_t i = 0; i < n; ++i) out += ",t" + std::to_string(i);
    if (labeled) out += ",label";
    out += '\n';
    for (const auto& s : data) {
        if (s.id.find_first_of(",\n\"") != std::string::npos) {
            throw DataError("series id '" + s.id + "' cannot be written to CSV");
        }
        out += s.id;
        for (double v : s.values) {
            out += ',';
            out += format_double(v);
        }
        if (labeled) out += *s.label == Label::nok ? ",1" : ",0";
        out += '\n';
    }
    return out;
}

Dataset dataset_from_csv(const std::string& text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw ParseError("CSV dataset is empty");
    const auto header = split_commas(lines.front());
    if (header.empty() || header.front() != "id") throw ParseError("CSV header must start with 'id'");
    const bool labeled = header.back() == "label";
    const std::size_t n = header.size() - 1 - (labeled ? 1 : 0);
    if (n == 0) throw ParseError("CSV header has no value columns");
    Dataset data;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto cells = split_commas(lines[li]);
        if (cells.size() != header.size()) {
            throw ParseError("line " + std::to_string(li + 1) + ": expected " +
                             std::to_string(header.size()) + " columns, got " +
                             std::to_string(cells.size()));
        }
        TimeSeries s;
        s.id = std::string(cells[0]);
        s.values.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            try {
                s.values.push_back(parse_double(cells[1 + i]));
            } catch (const ParseError& e) {
                throw ParseError("line " + std::to_string(li + 1) + ": " + e.what());
            }
            if (!std::isfinite(s.values.back())) {
                throw DataError("line " + std::to_string(li + 1) + ": non-finite value");
            }
        }
        if (labeled) s.label = parse_label(cells.back(), li + 1);
        data.push_back(std::move(s));
    }
    if (data.empty()) throw ParseError("CSV dataset has no rows");
    return data;
}

std::string dataset_to_ndjson(const Dataset& data) {
    std::string out;
    for (const auto& s : data) {
        for (double v : s.values) {
            if (!std::isfinite(v)) throw NumericalError("series '" + s.id + "' has a non-finite value");
        }
        json j{{"id", s.id}, {"values", s.values}};
        if (s.label) j["label"] = static_cast<int>(*s.label);
        out += j.dump();
        out += '\n';
    }
    return out;
}

Dataset dataset_from_ndjson(const std::string& text) {
    Dataset data;
    std::size_t line_no = 0;
    for (auto line : lines_of(text)) {
        ++line_no;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("id") || !j.contains("values")) {
            throw ParseError("line " + std::to_string(line_no) + ": need 'id' and 'values'");
        }
        TimeSeries s;
        try {
            s.id = j.at("id").get<std::string>();
            s.values = j.at("values").get<std::vector<double>>();
            if (j.contains("label") && !j.at("label").is_null()) {
                const int l = j.at("label").get<int>();
                if (l != 0 && l != 1) throw ParseError("label must be 0 or 1");
                s.label = static_cast<Label>(l);
            }
        } catch (const json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        data.push_back(std::move(s));
    }
    if (data.empty()) throw ParseError("NDJSON dataset has no rows");
    return data;
}

namespace {

bool is_ndjson(const fs::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".ndjson" || ext == ".jsonl") return true;
    if (ext == ".csv") return false;
    throw ParameterError("unsupported dataset extension '" + ext + "' (expected .csv or .ndjson)");
}

}  // namespace

Dataset load_dataset(const fs::path& path) {
    const bool ndjson = is_ndjson(path);
    const auto text = read_text(path);
    auto data = ndjson ? dataset_from_ndjson(text) : dataset_from_csv(text);
    common_length(data);
    return data;
}

void save_dataset(const fs::path& path, const Dataset& data) {
    write_text(path, is_ndjson(path) ? dataset_to_ndjson(data) : dataset_to_csv(data));
}

}  // namespace aee
