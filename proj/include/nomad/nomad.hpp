#pragma once

#include "nomad/linalg.hpp"
#include "nomad/cgm.hpp"
#include "nomad/snmf.hpp"
#include "nomad/bm.hpp"
#include "nomad/ring.hpp"
#include "nomad/datasets.hpp"
#include "nomad/manifold.hpp"
#include "nomad/io.hpp"
#include "nomad/svg.hpp"
