#pragma once

#include "coachsim/dialogue.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coachsim::sft {

/// One supervised example: everything said before an expert turn, and that turn.
struct TrainingExample
{
    std::vector<std::pair<dialogue::Speaker, std::string>> context; // ends with a novice turn
    std::string target;                                             // expert content
    std::string dialogue_id;
    std::size_t turn_index = 0; // index of the target turn in its dialogue

    friend bool operator == (TrainingExample const &, TrainingExample const &) = default;
};

/**
 * One example per EXPERT turn, ordered by (dialogue id, turn index).
 * Dialogues that break alternation are skipped and described in `warnings`.
 */
[[nodiscard]] std::vector<TrainingExample> export_sft(std::span<dialogue::DialogueSession const> corpus,
    std::vector<std::string> * warnings = nullptr);

/**
 * JSON Lines, one record per example:
 *   {"dialogue_id": ..., "turn_index": n, "messages": [{"role","content"}, ...]}
 * The model being trained plays the expert, so here the novice is "user" and
 * the expert "assistant"; the last message is always the assistant target.
 */
[[nodiscard]] std::string to_jsonl(std::span<TrainingExample const> examples);

/// Fine-tuning hyperparameters of the reference run.
struct TrainingConfig
{
    std::string base_model = "meta-llama/Llama-2-7b-chat-hf";
    double learning_rate = 2e-5;
    double weight_decay = 0.01;
    double warmup_ratio = 0.05;
    std::string lr_scheduler = "cosine";
    std::string optimizer = "adamw_torch";
    int max_steps = 435;
};

[[nodiscard]] std::string render_training_config(TrainingConfig const & config = {});

/// Writes render_training_config() to `path`. Throws Error(Internal) if unwritable.
void export_training_config(std::filesystem::path const & path, TrainingConfig const & config = {});

} // namespace coachsim::sft
