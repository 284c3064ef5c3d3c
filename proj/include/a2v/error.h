#ifndef A2V_ERROR_H_
#define A2V_ERROR_H_

#include <stdexcept>
#include <string>

namespace a2v {

struct ArgumentError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed or unsupported file content (WAV headers, manifests, checkpoints).
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Structurally valid file, but an encoding this project does not read
// (multi-channel audio, non-PCM16). Never silently converted.
struct UnsupportedFormatError : FormatError {
  using FormatError::FormatError;
};

struct LabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite training loss; carries the step at which it happened.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg, int64_t step_index)
      : std::runtime_error(msg), step(step_index) {}
  int64_t step;
};

}  // namespace a2v

#endif  // A2V_ERROR_H_
