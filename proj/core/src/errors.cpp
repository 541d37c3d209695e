#include "dinilab/errors.hpp"

// Anchors the vtables of the error hierarchy in this translation unit.
namespace dinilab {}
