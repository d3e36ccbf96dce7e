#ifndef MLKF_MLKF_HPP
#define MLKF_MLKF_HPP

#include "mlkf/bounds_lab.hpp"
#include "mlkf/core_model.hpp"
#include "mlkf/error.hpp"
#include "mlkf/group_knockoffs.hpp"
#include "mlkf/importance.hpp"
#include "mlkf/io.hpp"
#include "mlkf/mkf_filter.hpp"
#include "mlkf/pfilter.hpp"
#include "mlkf/sim_config.hpp"
#include "mlkf/simbench.hpp"
#include "mlkf/toml_lite.hpp"
#include "mlkf/version.hpp"

#endif  // MLKF_MLKF_HPP
