#include <cmath>

#include "aee/errors.hpp"
#include "aee/io.hpp"

namespace aee {

using nlohmann::json;

std::string explanations_to_csv(const std::vector<Explanation>& explanations) {
    std::string out = "series_id,method,target,index,value\n";
    for (const auto& e : explanations) {
        const std::string prefix =
            e.series_id + ',' + to_string(e.method) + ',' + e.target.name() + ',';
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            out += prefix + std::to_string(i) + ',' + format_double(e.values[i]) + '\n';
        }
    }
    return out;
}

std::string explanations_to_ndjson(const std::vector<Explanation>& explanations) {
    std::string out;
    for (const auto& e : explanations) {
        for (double v : e.values) {
            if (!std::isfinite(v)) throw NumericalError("explanation has a non-finite value");
        }
        out += json{{"series_id", e.series_id},
                    {"method", to_string(e.method)},
                    {"target", e.target.name()},
                    {"values", e.values}}
                   .dump();
        out += '\n';
    }
    return out;
}

std::vector<Explanation> explanations_from_ndjson(const std::string& text) {
    std::vector<Explanation> out;
    std::size_t start = 0;
    std::size_t line_no = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        const std::string line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (line.empty()) continue;
        try {
            const auto j = json::parse(line);
            Explanation e;
            e.series_id = j.at("series_id").get<std::string>();
            e.method = parse_method(j.at("method").get<std::string>());
            e.target = parse_target(j.at("target").get<std::string>());
            e.values = j.at("values").get<std::vector<double>>();
            out.push_back(std::move(e));
        } catch (const json::exception& e) {
            throw ParseError("explanations line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

std::string detection_to_csv(const Dataset& data, const Detection& detection) {
    if (data.size() != detection.flags.size()) {
        throw DimensionError("detection does not match the dataset");
    }
    std::string out = "id,label,cluster,core,outlier";
    for (std::size_t d = 0; d < detection.latents.dim; ++d) out += ",z" + std::to_string(d);
    out += '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        out += data[i].id + ',';
        out += data[i].label ? std::to_string(static_cast<int>(*data[i].label)) : "";
        out += ',' + std::to_string(detection.clusters.labels[i]);
        out += detection.clusters.is_core[i] ? ",1" : ",0";
        out += detection.flags[i] ? ",1" : ",0";
        for (double z : detection.latents.point(i)) out += ',' + format_double(z);
        out += '\n';
    }
    return out;
}

std::string scatter_to_csv(const Dataset& data, const std::vector<ScatterPoint>& points) {
    if (data.size() != points.size()) throw DimensionError("scatter does not match the dataset");
    std::string out = "id,label,x,y,tag\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        out += data[i].id + ',';
        out += data[i].label ? std::to_string(static_cast<int>(*data[i].label)) : "";
        out += ',' + format_double(points[i].x) + ',' + format_double(points[i].y) + ',' +
               to_string(points[i].tag) + '\n';
    }
    return out;
}

std::string qm_results_to_csv(const std::vector<QMResult>& results) {
    std::string out = "series_id,label,d_self,d_random,d_xai,ordering_satisfied,tied\n";
    for (const auto& r : results) {
        out += r.series_id + ',' + std::to_string(static_cast<int>(r.label)) + ',' +
               format_double(r.d_self) + ',' + format_double(r.d_random) + ',' +
               format_double(r.d_xai) + (r.ordering_satisfied ? ",1" : ",0") +
               (r.tied ? ",1" : ",0") + '\n';
    }
    return out;
}

namespace {

const char* label_name(Label l) { return l == Label::ok ? "ok" : "nok"; }

}  // namespace

json qm_summary_json(const QMSummary& s) {
    json strata = json::array();
    for (const auto& st : s.strata) {
        json item{{"class", label_name(st.label)},
                  {"condition", to_string(st.condition)},
                  {"count", st.count},
                  {"empty", st.empty}};
        if (!st.empty) {
            item["q1"] = st.stats.q1;
            item["median"] = st.stats.median;
            item["q3"] = st.stats.q3;
            item["lower_fence"] = st.stats.lower_fence;
            item["upper_fence"] = st.stats.upper_fence;
        }
        strata.push_back(std::move(item));
    }
    return json{{"method", to_string(s.method)},
                {"normalization",
                 {{"latent", "euclidean / sqrt(latent_dim)"},
                  {"summary", "min-max over noise and xai distances of this method"},
                  {"min", s.norm_min},
                  {"max", s.norm_max}}},
                {"strata", std::move(strata)}};
}

QMSummary qm_summary_from_json(const json& j) {
    QMSummary s;
    try {
        s.method = parse_method(j.at("method").get<std::string>());
        s.norm_min = j.at("normalization").at("min").get<double>();
        s.norm_max = j.at("normalization").at("max").get<double>();
        for (const auto& item : j.at("strata")) {
            QMStratum st;
            const auto cls = item.at("class").get<std::string>();
            if (cls != "ok" && cls != "nok") throw ParseError("unknown class '" + cls + "'");
            st.label = cls == "ok" ? Label::ok : Label::nok;
            const auto cond = item.at("condition").get<std::string>();
            if (cond != "noise" && cond != "xai") throw ParseError("unknown condition '" + cond + "'");
            st.condition = cond == "noise" ? Condition::noise : Condition::xai;
            st.count = item.at("count").get<std::size_t>();
            st.empty = item.at("empty").get<bool>();
            if (!st.empty) {
                st.stats.q1 = item.at("q1").get<double>();
                st.stats.median = item.at("median").get<double>();
                st.stats.q3 = item.at("q3").get<double>();
                st.stats.lower_fence = item.at("lower_fence").get<double>();
                st.stats.upper_fence = item.at("upper_fence").get<double>();
            }
            s.strata.push_back(st);
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("QM summary: ") + e.what());
    }
    return s;
}

std::string qm_summary_to_csv(const std::vector<QMSummary>& summaries) {
    std::string out = "method,class,condition,count,q1,median,q3,lower_fence,upper_fence\n";
    for (const auto& s : summaries) {
        for (const auto& st : s.strata) {
            out += std::string(to_string(s.method)) + ',' + label_name(st.label) + ',' +
                   to_string(st.condition) + ',' + std::to_string(st.count);
            if (st.empty) {
                out += ",,,,,\n";
                continue;
            }
            out += ',' + format_double(st.stats.q1) + ',' + format_double(st.stats.median) + ',' +
                   format_double(st.stats.q3) + ',' + format_double(st.stats.lower_fence) + ',' +
                   format_double(st.stats.upper_fence) + '\n';
        }
    }
    return out;
}

}  // namespace aee
