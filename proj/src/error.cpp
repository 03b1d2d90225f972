#include "verbcal/error.hpp"

#include <sstream>

namespace verbcal {

namespace {
std::string describe(std::size_t index, double value) {
  std::ostringstream os;
  os << "invalid confidence " << value << " at index " << index;
  return os.str();
}
}  // namespace

InvalidConfidence::InvalidConfidence(std::size_t index, double value)
    : InvalidInput(describe(index, value)), index_(index), value_(value) {}

}  // namespace verbcal
