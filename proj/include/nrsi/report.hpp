#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrsi/serialize.hpp"

namespace nrsi {

namespace detail {

inline std::string join_nps(const ordered_json& labels) {
    std::string out;
    for (const auto& pair : labels) {
        if (!out.empty()) out += ", ";
        out += pair.at(0).get<std::string>();
    }
    return out;
}

}  // namespace detail

// Plain-text table over schema JSON lines: one block per schema with the
// relation signature and the representative NPs of each induced category.
inline std::string render_schema_table(const std::vector<ordered_json>& schemas) {
  try {
    std::ostringstream out;
    const std::string rule(78, '-');
    out << rule << '\n';
    out << "relation schema | NPs from the induced categories\n";
    out << rule << '\n';
    for (const ordered_json& s : schemas) {
        const std::string relation = s.at("relation").get<std::string>();
        std::string signature = relation + "<";
        std::vector<std::pair<std::string, std::string>> rows;
        const auto& labels = s.at("labels");
        if (s.contains("a_col")) {
            const std::string a = "A" + std::to_string(s.at("a_col").get<std::size_t>());
            const std::string b = "B" + std::to_string(s.at("b_col").get<std::size_t>());
            signature += a + "," + b;
            rows.emplace_back(a, detail::join_nps(labels.at("a")));
            rows.emplace_back(b, detail::join_nps(labels.at("b")));
            const auto& c_cols = s.at("c_cols");
            const auto& c_labels = labels.at("c");
            for (std::size_t i = 0; i < c_cols.size(); ++i) {
                const std::string c = "C" + std::to_string(c_cols[i].get<std::size_t>());
                signature += "," + c;
                rows.emplace_back(c, detail::join_nps(c_labels[i]));
            }
        } else {
            signature += "subject,object,other";
            rows.emplace_back("subject", detail::join_nps(labels.at("a")));
            rows.emplace_back("object", detail::join_nps(labels.at("b")));
            rows.emplace_back("other", detail::join_nps(labels.at("c")[0]));
        }
        signature += ">";
        out << signature << "  (method " << s.at("method").get<std::string>() << ", score "
            << to_roundtrip_string(s.at("score").get<double>()) << ")\n";
        for (const auto& [col, nps] : rows) out << "    " << col << ": " << nps << '\n';
        out << rule << '\n';
    }
    return out.str();
  } catch (const nlohmann::json::exception& e) {
    throw data_error(std::string("schema line: ") + e.what());
  }
}

}  // namespace nrsi
