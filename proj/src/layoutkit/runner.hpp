#pragma once

#include <string>
#include <vector>

#include "layoutkit/config.hpp"

namespace layoutkit {

// Output root resolution: explicit argument, then LAYOUTKIT_RUN_DIR, then
// config.run_dir, then "./runs".
std::string resolve_run_root(const RunConfig& cfg, const std::string& explicit_out);

// Executes one subcommand against a validated config. Inputs are loaded and
// checked before anything is written; outputs land under
// <root>/<command>/ which is append-only (existing files are never
// overwritten). Returns the human-readable summary the CLI prints.
std::string run_command(const RunConfig& cfg, const std::string& command,
                        const std::string& out_root);

// Renders the inspect view (tokens, positions, boxes, mask actions) for one
// document; `jsonl` selects the machine-readable dump used by golden tests.
std::string inspect_document(const RunConfig& cfg, bool jsonl);

uint64_t file_content_hash(const std::string& path);

}  // namespace layoutkit
