#include <algorithm>
#include <cstdio>
#include <sstream>

#include "knowtrans/experiment.hpp"

namespace knowtrans {

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

double r_at(const Report& r, std::size_t k) {
    auto it = r.retrieval.r_at.find(k);
    return it == r.retrieval.r_at.end() ? 0.0 : it->second;
}

std::string render(const std::vector<std::string>& header, const std::vector<bool>& right,
                   const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream out;
    auto line = [&](const std::vector<std::string>& cells) {
        out << '|';
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string pad(width[c] - cells[c].size(), ' ');
            out << ' ' << (right[c] ? pad + cells[c] : cells[c] + pad) << " |";
        }
        out << '\n';
    };
    line(header);
    out << '|';
    for (std::size_t c = 0; c < header.size(); ++c) {
        out << (right[c] ? std::string(width[c] + 1, '-') + ":" : ":" + std::string(width[c] + 1, '-')) << '|';
    }
    out << '\n';
    for (const auto& row : rows) line(row);
    return out.str();
}

}  // namespace

std::string emit_report_table(std::vector<Report> reports, ReportLayout layout) {
    for (const auto& r : reports) {
        if (r.layout != layout) {
            throw ConfigError("report '" + r.name + "' has layout " + to_string(r.layout) + ", table is " +
                              to_string(layout));
        }
    }
    std::stable_sort(reports.begin(), reports.end(),
                     [](const Report& a, const Report& b) { return a.fingerprint < b.fingerprint; });
    std::vector<std::vector<std::string>> rows;
    if (layout == ReportLayout::retrieval) {
        for (const auto& r : reports) {
            rows.push_back({r.source_label, r.target_label, r.learning_label, fixed3(r_at(r, 1)), fixed3(r_at(r, 5)),
                            fixed3(r_at(r, 10)), std::to_string(r.retrieval.mr)});
        }
        return render({"Source", "Target", "Learning", "R@1", "R@5", "R@10", "MR"},
                      {false, false, false, true, true, true, true}, rows);
    }
    for (const auto& r : reports) {
        rows.push_back({r.vision_label, r.learning_label, r.knowledge_label, r.det_label, r.da_label,
                        fixed3(r.accuracy)});
    }
    return render({"Vision", "Learning", "Knowledge", "DET", "DA", "Accuracy"},
                  {false, false, false, false, false, true}, rows);
}

}  // namespace knowtrans
