#pragma once

#include "hybridpf/types.hpp"
#include "hybridpf/zip_load.hpp"
#include "hybridpf/network.hpp"
#include "hybridpf/feeder.hpp"
#include "hybridpf/oracle.hpp"
#include "hybridpf/anchors.hpp"
#include "hybridpf/data.hpp"
#include "hybridpf/sample_io.hpp"
#include "hybridpf/linear_model.hpp"
#include "hybridpf/trainer.hpp"
#include "hybridpf/model_io.hpp"
#include "hybridpf/simplex.hpp"
#include "hybridpf/fme.hpp"
#include "hybridpf/qrange.hpp"
#include "hybridpf/evalharness.hpp"
