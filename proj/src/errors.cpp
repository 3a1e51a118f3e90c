#include "carpenter/errors.hpp"

#include <exception>
#include <sstream>

namespace carpenter {

namespace {

std::string bracketing_message(std::size_t step, double current, double feed, double target) {
  std::ostringstream os;
  os.precision(17);
  os << "bracketing failure at step " << step << ": target " << target
     << " not between current value " << current << " and feed value " << feed;
  return os.str();
}

} // namespace

BracketingError::BracketingError(std::size_t step, double current, double feed, double target)
  : DomainError(bracketing_message(step, current, feed, target))
  , step_(step)
  , current_(current)
  , feed_(feed)
  , target_(target) {}

void rethrow_with_stage(const std::string& stage) {
  try {
    throw;
  } catch (const FormatError& e) {
    throw FormatError(stage + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(stage + ": " + e.what());
  }
}

} // namespace carpenter
