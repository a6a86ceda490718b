// Hand-built reports behind the golden tables.
#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "knowtrans/experiment.hpp"

namespace golden {

inline knowtrans::Report retrieval_row(const std::string& fp, const std::string& src, const std::string& tgt,
                                       const std::string& learning, double r1, double r5, double r10,
                                       std::size_t mr) {
    knowtrans::Report r;
    r.name = "row-" + fp;
    r.fingerprint = fp;
    r.layout = knowtrans::ReportLayout::retrieval;
    r.source_label = src;
    r.target_label = tgt;
    r.learning_label = learning;
    r.vision_label = "None";
    r.knowledge_label = "Retrieved";
    r.det_label = "-";
    r.da_label = "-";
    r.retrieval.r_at = {{1, r1}, {5, r5}, {10, r10}};
    r.retrieval.mr = mr;
    r.retrieval.n_queries = 40;
    return r;
}

// Deliberately out of fingerprint order.
inline std::vector<knowtrans::Report> retrieval_reports() {
    return {retrieval_row("00000000000000f0", "domain-a", "domain-b", "Transfer (w/ DET+DA)", 0.08, 0.31, 0.46, 14),
            retrieval_row("0000000000000002", "domain-b", "-", "Direct", 0.1234, 0.4567, 0.5, 12),
            retrieval_row("000000000000000a", "domain-a", "domain-b", "Transfer (w/o DET)", 0.0, 0.05, 0.1, 123),
            retrieval_row("0000000000000001", "domain-a", "-", "Direct", 0.25, 0.5, 0.625, 7),
            retrieval_row("000000000000000b", "domain-a", "domain-b", "Transfer (w/ DET)", 0.075, 0.3, 0.45, 15),
            retrieval_row("0000000000000003", "Both", "-", "Direct", 1.0, 1.0, 1.0, 1)};
}

inline knowtrans::Report reasoning_row(const std::string& fp, const std::string& vision, const std::string& learning,
                                       const std::string& knowledge, const std::string& det, const std::string& da,
                                       double acc) {
    auto r = retrieval_row(fp, "domain-a", "-", learning, 0, 0, 0, 1);
    r.layout = knowtrans::ReportLayout::reasoning;
    r.vision_label = vision;
    r.knowledge_label = knowledge;
    r.det_label = det;
    r.da_label = da;
    r.accuracy = acc;
    return r;
}

inline std::vector<knowtrans::Report> reasoning_reports() {
    return {reasoning_row("c", "Caption", "Direct", "GT", "-", "-", 0.875),
            reasoning_row("a", "None", "Direct", "None", "-", "-", 0.25),
            reasoning_row("d", "None", "Transfer (w/ DET+DA)", "Retrieved", "appositive", "yes", 2.0 / 3.0),
            reasoning_row("b", "Image", "Direct", "Retrieved", "-", "-", 0.5)};
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace golden
