#pragma once

#include "cliqueseg/core.hpp"
#include "cliqueseg/corpus.hpp"
#include "cliqueseg/energy.hpp"
#include "cliqueseg/eval.hpp"
#include "cliqueseg/features.hpp"
#include "cliqueseg/graph.hpp"
#include "cliqueseg/inference.hpp"
#include "cliqueseg/io.hpp"
#include "cliqueseg/parallel.hpp"
#include "cliqueseg/pipeline.hpp"
#include "cliqueseg/synthlang.hpp"
#include "cliqueseg/training.hpp"
