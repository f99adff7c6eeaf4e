#pragma once

#include <stdexcept>
#include <string>

namespace xray {

enum class Errc {
  kParse,
  kIndexOutOfRange,
  kEmptyMesh,
  kIo,
  kZeroExtent,
  kDegenerateFace,
  kInvalidArgument,
  kBadMagic,
  kVersionMismatch,
  kTruncatedPayload,
  kCorruptHit,
  kOutsideDomain,
  kNonConvergence,
  kDegenerateIso,
  kDegenerateConfiguration,
  kShapeMismatch,
  kDomain,
  kEmptyPointCloud,
};

const char* to_string(Errc code);

/// Every failure in the library surfaces as this exception; `code()` names the
/// failure class so callers (and the CLI exit-code mapping) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace xray
