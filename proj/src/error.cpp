#include "marsdust/error.hpp"
