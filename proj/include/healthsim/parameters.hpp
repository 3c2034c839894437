#ifndef HEALTHSIM_PARAMETERS_HPP
#define HEALTHSIM_PARAMETERS_HPP

#include "healthsim/coefs.hpp"
#include "healthsim/expm.hpp"
#include "healthsim/state_values.hpp"
#include "healthsim/statevals.hpp"
#include "healthsim/transprobs.hpp"

#endif  // HEALTHSIM_PARAMETERS_HPP
