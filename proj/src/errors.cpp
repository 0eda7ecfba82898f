#include "hmdetect/errors.hpp"

namespace hmdetect {

void throw_validation(const std::string& what) { throw ValidationError(what); }
void throw_format(const std::string& what) { throw FormatError(what); }
void throw_io(const std::string& what) { throw IoError(what); }

}  // namespace hmdetect
