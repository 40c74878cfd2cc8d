#pragma once

#include "jmml/biomarkers.hpp"
#include "jmml/edcc_cae.hpp"
#include "jmml/error.hpp"
#include "jmml/forest.hpp"
#include "jmml/jecl.hpp"
#include "jmml/mbpls.hpp"
#include "jmml/metrics.hpp"
#include "jmml/nn/adam.hpp"
#include "jmml/nn/dense.hpp"
#include "jmml/nn/grad_check.hpp"
#include "jmml/nn/losses.hpp"
#include "jmml/nn/serialize.hpp"
#include "jmml/pipeline/config.hpp"
#include "jmml/pipeline/dataset.hpp"
#include "jmml/pipeline/experiment.hpp"
#include "jmml/pipeline/io.hpp"
#include "jmml/pipeline/labels.hpp"
#include "jmml/pipeline/report.hpp"
#include "jmml/pipeline/split.hpp"
#include "jmml/pipeline/synth.hpp"
#include "jmml/types.hpp"
