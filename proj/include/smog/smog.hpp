// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "smog/bm25.hpp"
#include "smog/cache.hpp"
#include "smog/chat_model.hpp"
#include "smog/config.hpp"
#include "smog/dataset.hpp"
#include "smog/embedding.hpp"
#include "smog/error.hpp"
#include "smog/eval.hpp"
#include "smog/explore.hpp"
#include "smog/http.hpp"
#include "smog/kg.hpp"
#include "smog/local_store.hpp"
#include "smog/matcher.hpp"
#include "smog/mock_oracle.hpp"
#include "smog/oracle.hpp"
#include "smog/prompts.hpp"
#include "smog/rank.hpp"
#include "smog/remote_chat.hpp"
#include "smog/remote_embedding.hpp"
#include "smog/sparql_client.hpp"
#include "smog/tee.hpp"
#include "smog/text.hpp"
#include "smog/trace_json.hpp"
