#pragma once

#include "dvcseq/api.hpp"
#include "dvcseq/caption_metrics.hpp"
#include "dvcseq/decoder.hpp"
#include "dvcseq/domain.hpp"
#include "dvcseq/error.hpp"
#include "dvcseq/io.hpp"
#include "dvcseq/loss.hpp"
#include "dvcseq/metrics.hpp"
#include "dvcseq/porter_stemmer.hpp"
#include "dvcseq/seq_codec.hpp"
#include "dvcseq/time_codec.hpp"
#include "dvcseq/tokenizer.hpp"
#include "dvcseq/transforms.hpp"
