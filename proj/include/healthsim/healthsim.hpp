#ifndef HEALTHSIM_HEALTHSIM_HPP
#define HEALTHSIM_HEALTHSIM_HPP

#include "healthsim/cea.hpp"
#include "healthsim/cohort_dtstm.hpp"
#include "healthsim/core_data.hpp"
#include "healthsim/indiv_ctstm.hpp"
#include "healthsim/param_io.hpp"
#include "healthsim/parameters.hpp"
#include "healthsim/psm.hpp"
#include "healthsim/survival_dists.hpp"

#endif  // HEALTHSIM_HEALTHSIM_HPP
