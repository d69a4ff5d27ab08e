#pragma once

#include "cofed/orchestrator.hpp"
#include "cofed/theory.hpp"

#include <filesystem>
#include <string>

namespace cofed::report {

// Machine-readable output is line-delimited JSON, one object per line, each
// tagged with a "record" field. Output is deterministic byte for byte.

std::string to_records(const RoundReport& report);
std::string to_table(const RoundReport& report);
RoundReport from_records(const std::string& text);

std::string alpha_sweep_records(std::span<const AlphaSweepPoint> points);
std::string alpha_sweep_table(std::span<const AlphaSweepPoint> points);
std::string size_sweep_records(std::span<const SizeSweepPoint> points);
std::string size_sweep_table(std::span<const SizeSweepPoint> points);

std::string to_records(const theory::RoundAnalysis& analysis);
std::string to_table(const theory::RoundAnalysis& analysis);

/// One participant line as in to_records, without the trailing newline.
std::string participant_record(const ParticipantOutcome& outcome);
ParticipantOutcome parse_participant_record(const std::string& line);

std::string bundle_line(const PseudolabelBundle& bundle);
PseudolabelBundle parse_bundle_line(const std::string& line);

/// Writes report.{jsonl,txt}, participants.jsonl, predictions.jsonl,
/// pseudolabels.jsonl and bundles.jsonl. Only category ids, indices and
/// metrics are written, never features.
void write_run_directory(const std::filesystem::path& dir, const RoundResult& result);
RoundResult read_run_directory(const std::filesystem::path& dir);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace cofed::report
