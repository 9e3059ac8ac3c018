#include "sips/field.hpp"

namespace sips {

thread_local uint64_t Fp::ops_ = 0;

}  // namespace sips
