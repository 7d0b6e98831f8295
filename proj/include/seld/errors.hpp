#pragma once

#include <stdexcept>
#include <string>

namespace seld {

// One exception type per contract violation the library reports. Callers that
// batch over files catch SeldError and keep going; programming errors still
// surface as the standard logic_error family.
class SeldError : public std::runtime_error {
 public:
  explicit SeldError(const std::string& what) : std::runtime_error(what) {}
};

#define SELD_DEFINE_ERROR(name)                                  \
  class name : public SeldError {                                \
   public:                                                       \
    explicit name(const std::string& what) : SeldError(what) {}  \
  }

SELD_DEFINE_ERROR(EmptyClip);
SELD_DEFINE_ERROR(ConfigMismatch);
SELD_DEFINE_ERROR(NotHermitian);
SELD_DEFINE_ERROR(SingularNoiseMatrix);
SELD_DEFINE_ERROR(DomainError);
SELD_DEFINE_ERROR(FormatUnknown);
SELD_DEFINE_ERROR(FormatMismatch);
SELD_DEFINE_ERROR(LayoutMismatch);
SELD_DEFINE_ERROR(DegenerateInput);
SELD_DEFINE_ERROR(InsufficientSegments);
SELD_DEFINE_ERROR(UnsupportedFormat);
SELD_DEFINE_ERROR(ChannelCountMismatch);
SELD_DEFINE_ERROR(MalformedRow);
SELD_DEFINE_ERROR(OutOfRangeClass);
SELD_DEFINE_ERROR(ConfigInvalid);
SELD_DEFINE_ERROR(NoReferences);

#undef SELD_DEFINE_ERROR

}  // namespace seld
