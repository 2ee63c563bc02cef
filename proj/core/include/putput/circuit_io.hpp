#pragma once

#include <putput/circuit.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace putput {

// Line-based text formats.
//
//   putput-pc v1                 putput-lc v1
//   <id> L <var> <0|1>           <id> L <var> <0|1>
//   <id> P <child> ...           <id> A <child> ...
//   <id> S <child>:<weight> ...  <id> O <child> ...
//   root <id>                    root <id>
//
// Ids are dense and ascending; children precede parents. Weights are written
// in shortest round-trip decimal form, so write/read is bit-exact. The empty
// circuit is written as a single `empty` line instead of `root`. Blank lines
// and lines starting with '#' are ignored on input.

void write_pc(std::ostream& os, const ProbCircuit& pc);
std::string write_pc(const ProbCircuit& pc);
void write_pc_file(const std::filesystem::path& path, const ProbCircuit& pc);

// Parses and validates. Errors carry the offending line number.
ProbCircuit read_pc(std::istream& is, Smoothness smoothness = Smoothness::Required);
ProbCircuit read_pc(const std::string& text,
                    Smoothness smoothness = Smoothness::Required);
ProbCircuit import_circuit(const std::filesystem::path& path,
                           Smoothness smoothness = Smoothness::Required);

void write_lc(std::ostream& os, const LogicCircuit& lc);
std::string write_lc(const LogicCircuit& lc);
void write_lc_file(const std::filesystem::path& path, const LogicCircuit& lc);
LogicCircuit read_lc(std::istream& is);
LogicCircuit read_lc(const std::string& text);
LogicCircuit read_lc_file(const std::filesystem::path& path);

}  // namespace putput
