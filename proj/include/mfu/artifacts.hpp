#pragma once

// Artifact directories: run outputs plus a manifest that pins the resolved
// configuration, and consolidated reports built from them.

#include <string>

#include "mfu/experiments.hpp"

namespace mfu::artifacts {

inline constexpr const char* kVersion = "1.0.0";

/// 16-digit hex FNV-1a.
std::string content_hash(const std::string& s);

experiments::Json manifest(const experiments::ExperimentConfig& cfg, const experiments::Result& r, int threads);

/// Writes the result files, summary.json and manifest.json. Output goes to a
/// sibling temporary directory that replaces `dir` once complete, so a failed
/// write leaves no partial output. An existing `dir` is only replaced when it
/// is empty or holds a previous run (has manifest.json); otherwise ArgumentError.
void write(const experiments::ExperimentConfig& cfg, const experiments::Result& r, const std::string& dir,
           int threads);

struct Report {
  experiments::Json json;
  std::string text;
};

/// Verdicts, group rankings by T_total and robustness bound checks of a run
/// directory. Throws ArgumentError when manifest.json is missing.
Report report(const std::string& dir);

}  // namespace mfu::artifacts
