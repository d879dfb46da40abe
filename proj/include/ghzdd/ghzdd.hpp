#ifndef GHZDD_GHZDD_HPP
#define GHZDD_GHZDD_HPP

#include "ghzdd/core.hpp"
#include "ghzdd/spin_model.hpp"
#include "ghzdd/metrics.hpp"
#include "ghzdd/mixed_state.hpp"
#include "ghzdd/parallel.hpp"
#include "ghzdd/oracle.hpp"
#include "ghzdd/search.hpp"
#include "ghzdd/io.hpp"
#include "ghzdd/verify.hpp"

#endif
