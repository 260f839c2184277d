#pragma once

#include "escluster/baseline.hpp"
#include "escluster/datagen.hpp"
#include "escluster/early_stopping.hpp"
#include "escluster/edge_probability.hpp"
#include "escluster/edge_recall.hpp"
#include "escluster/errors.hpp"
#include "escluster/feature_store.hpp"
#include "escluster/knn_graph.hpp"
#include "escluster/map_equation.hpp"
#include "escluster/metrics.hpp"
#include "escluster/pipeline.hpp"
