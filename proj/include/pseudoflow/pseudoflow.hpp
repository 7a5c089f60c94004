// pseudoflow - pseudo scene-flow labels from camera projection and 2D flow
#ifndef PSEUDOFLOW_PSEUDOFLOW_HPP
#define PSEUDOFLOW_PSEUDOFLOW_HPP

#include "pseudoflow/core.hpp"
#include "pseudoflow/flow_field.hpp"
#include "pseudoflow/flow_fit.hpp"
#include "pseudoflow/geometry.hpp"
#include "pseudoflow/io.hpp"
#include "pseudoflow/label_gen.hpp"
#include "pseudoflow/metrics.hpp"
#include "pseudoflow/noise_model.hpp"
#include "pseudoflow/preprocess.hpp"
#include "pseudoflow/random.hpp"
#include "pseudoflow/spatial_index.hpp"
#include "pseudoflow/synth.hpp"

#endif  // PSEUDOFLOW_PSEUDOFLOW_HPP
