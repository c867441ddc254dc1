#ifndef VLB_VLB_HPP
#define VLB_VLB_HPP

#include "core.hpp"
#include "density.hpp"
#include "dsm.hpp"
#include "evaluation.hpp"
#include "functionals.hpp"
#include "identity.hpp"
#include "importance.hpp"
#include "network.hpp"
#include "noise.hpp"
#include "optim.hpp"
#include "predictor.hpp"
#include "presets.hpp"
#include "proposal.hpp"
#include "quadrature.hpp"
#include "rng.hpp"
#include "schedule.hpp"
#include "training.hpp"

#endif
