#ifndef ECHOLENS_ECHOLENS_HPP
#define ECHOLENS_ECHOLENS_HPP

#include "echolens/chambers.hpp"
#include "echolens/clustering.hpp"
#include "echolens/config.hpp"
#include "echolens/density.hpp"
#include "echolens/echo.hpp"
#include "echolens/eigen.hpp"
#include "echolens/graph.hpp"
#include "echolens/impact.hpp"
#include "echolens/ingest.hpp"
#include "echolens/io.hpp"
#include "echolens/leaders.hpp"
#include "echolens/nullmodel.hpp"
#include "echolens/parallel.hpp"
#include "echolens/pipeline.hpp"
#include "echolens/polarization.hpp"
#include "echolens/random.hpp"
#include "echolens/sets.hpp"
#include "echolens/snapshot.hpp"
#include "echolens/stats.hpp"
#include "echolens/synth.hpp"
#include "echolens/types.hpp"

#endif // ECHOLENS_ECHOLENS_HPP
