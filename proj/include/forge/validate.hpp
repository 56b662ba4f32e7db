#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace forge::io {

struct Violation {
    std::size_t line = 0;  // 1-based
    std::string message;
};

struct ValidationReport {
    std::size_t records = 0;
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
};

/// Known schemas: mask, grounding, spatial, scene, planning, trajectory,
/// episode, indomain.
std::vector<std::string> schema_names();

/// Per-line structural checks (required keys, ranges, markup parses). Never
/// mutates the input; unreadable lines are violations, not exceptions.
ValidationReport validate_file(const std::filesystem::path& path, const std::string& schema);

}  // namespace forge::io
