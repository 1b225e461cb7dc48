#pragma once

// Library umbrella; the HTTP service lives in ca3d/service.hpp.
#include "ca3d/ca_engine.hpp"
#include "ca3d/error.hpp"
#include "ca3d/evaluate.hpp"
#include "ca3d/ingest.hpp"
#include "ca3d/labels.hpp"
#include "ca3d/pipeline.hpp"
#include "ca3d/proximity.hpp"
#include "ca3d/reduce.hpp"
#include "ca3d/represent.hpp"
