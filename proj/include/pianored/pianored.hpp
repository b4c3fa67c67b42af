#pragma once

#include "pianored/common.hpp"
#include "pianored/pitch.hpp"
#include "pianored/score.hpp"
#include "pianored/smf.hpp"
#include "pianored/models.hpp"
#include "pianored/fingering.hpp"
#include "pianored/default_fingering.hpp"
#include "pianored/params_io.hpp"
#include "pianored/viterbi.hpp"
#include "pianored/hand_models.hpp"
#include "pianored/fingering_decoder.hpp"
#include "pianored/merged_decoder.hpp"
#include "pianored/decoders.hpp"
#include "pianored/difficulty.hpp"
#include "pianored/reduction.hpp"
#include "pianored/report.hpp"
#include "pianored/synthetic.hpp"
