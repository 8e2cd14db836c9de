#pragma once

#include "stegowave/audio/resample.hpp"
#include "stegowave/audio/spectral.hpp"
#include "stegowave/audio/wav_io.hpp"
#include "stegowave/audio/waveform.hpp"
#include "stegowave/dataset/corpus.hpp"
#include "stegowave/dataset/pair_sampler.hpp"
#include "stegowave/evaluation/fidelity.hpp"
#include "stegowave/evaluation/linear_classifier.hpp"
#include "stegowave/evaluation/metrics.hpp"
#include "stegowave/evaluation/plot.hpp"
#include "stegowave/evaluation/reports.hpp"
#include "stegowave/evaluation/security.hpp"
#include "stegowave/evaluation/srm_features.hpp"
#include "stegowave/models/model_set.hpp"
#include "stegowave/models/networks.hpp"
#include "stegowave/models/srm.hpp"
#include "stegowave/pipeline.hpp"
#include "stegowave/training/config.hpp"
#include "stegowave/training/losses.hpp"
#include "stegowave/training/noise.hpp"
#include "stegowave/training/step.hpp"
#include "stegowave/training/trainer.hpp"
#include "stegowave/cli/run_config.hpp"
#include "stegowave/cli/commands.hpp"
