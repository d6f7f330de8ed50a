#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "curricula/imitation.hpp"
#include "curricula/student.hpp"
#include "curricula/teacher.hpp"

namespace curricula {

// Checkpoint container: a directory holding manifest.json (format version,
// seeds, tensor shapes and offsets, component metadata) and params.bin (the
// concatenated little-endian 64-bit floats of every tensor), plus the
// teacher's state as JSON when present.
void save_checkpoint(const std::string& dir, const StudentPolicy& policy,
                     const ImitationModel* imitation, const Teacher* teacher, long round,
                     uint64_t seed);

struct LoadedCheckpoint {
  long round = 0;
  uint64_t seed = 0;
  nlohmann::json manifest;
  std::map<std::string, Matrix> tensors;  // keys like "student/low.W1"
  nlohmann::json teacher_state;           // null when absent
};
LoadedCheckpoint load_checkpoint(const std::string& dir);

// Copies every "<prefix>/<name>" tensor into the store; shapes must match.
void apply_tensors(const LoadedCheckpoint& ckpt, const std::string& prefix, ParamStore& store);

nlohmann::json teacher_to_json(const Teacher& teacher);
void restore_teacher(const nlohmann::json& state, Teacher& teacher);

}  // namespace curricula
