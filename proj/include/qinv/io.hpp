// Copyright (c) qinv contributors.
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <qinv/analyzer.hpp>
#include <qinv/system_model.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace qinv {

/// Parses a JSON system description. See README for the grammar.
/// Errors are ParseError with a line number when one can be located.
QuantizedSystem parse_system(const std::string& text, const std::string& origin = "<input>");
QuantizedSystem load_system(const std::filesystem::path& path);

/// Scalar literal: a JSON number or a string holding a decimal or a fraction "n/m".
double parse_scalar(const std::string& s);

std::uint64_t fnv1a64(const std::string& bytes);

struct ReportInfo {
    std::string input_name;
    std::string input_hash;  // 16 hex digits
    int level = 8;
    int k_max = 8;
    std::size_t budget = 0;
    bool strict_boundary = false;
    std::string timestamp;   // ISO-8601; the only line that differs between identical runs
};

/// JSON report with one field per line at the top level; the timestamp is
/// written last on its own line.
std::string render_report(const Analysis& an, const ReportInfo& info);

/// Writes the report as <hash>.report.json in dir, or <hash>.<n>.report.json
/// when earlier reports exist. Returns the path written.
std::filesystem::path write_report(const std::filesystem::path& dir, const std::string& hash, const std::string& body);

std::string current_timestamp();

}  // namespace qinv
