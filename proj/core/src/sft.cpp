#include "coachsim/sft.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>

namespace coachsim::sft {

std::vector<TrainingExample> export_sft(std::span<dialogue::DialogueSession const> corpus,
    std::vector<std::string> * warnings)
{
    std::vector<dialogue::DialogueSession const *> ordered;
    for (auto const & d : corpus) {
        ordered.push_back(&d);
    }
    std::stable_sort(ordered.begin(), ordered.end(), [](auto const * a, auto const * b) { return a->id < b->id; });

    std::vector<TrainingExample> examples;
    for (auto const * d : ordered) {
        try {
            dialogue::check_transcript_shape(d->turns);
        } catch (FormatError const & e) {
            if (warnings != nullptr) {
                warnings->push_back("skipping dialogue '" + d->id + "': " + e.what());
            }
            continue;
        }
        for (std::size_t i = 1; i < d->turns.size(); ++i) {
            if (d->turns[i].role != dialogue::Speaker::Expert) {
                continue;
            }
            TrainingExample ex;
            ex.dialogue_id = d->id;
            ex.turn_index = i;
            ex.target = d->turns[i].content;
            for (std::size_t j = 0; j < i; ++j) {
                ex.context.emplace_back(d->turns[j].role, d->turns[j].content);
            }
            examples.push_back(std::move(ex));
        }
    }
    return examples;
}

std::string to_jsonl(std::span<TrainingExample const> examples)
{
    std::string out;
    for (auto const & ex : examples) {
        nlohmann::ordered_json record;
        record["dialogue_id"] = ex.dialogue_id;
        record["turn_index"] = ex.turn_index;
        auto messages = nlohmann::ordered_json::array();
        for (auto const & [role, content] : ex.context) {
            messages.push_back({{"role", role == dialogue::Speaker::Expert ? "assistant" : "user"}, {"content", content}});
        }
        messages.push_back({{"role", "assistant"}, {"content", ex.target}});
        record["messages"] = std::move(messages);
        out += record.dump();
        out += '\n';
    }
    return out;
}

std::string render_training_config(TrainingConfig const & config)
{
    nlohmann::ordered_json doc;
    doc["_provenance"] = "Hyperparameters of the reference expert-model fine-tune: full fine-tune of "
                         "Llama-2-7b-chat-hf on 1,415 augmented dialogues split into 9,271 expert-turn "
                         "examples, single A100, about 1.5 hours. Values are fixed; edit only to deviate "
                         "deliberately.";
    doc["base_model"] = config.base_model;
    doc["learning_rate"] = config.learning_rate;
    doc["weight_decay"] = config.weight_decay;
    doc["warmup_ratio"] = config.warmup_ratio;
    doc["lr_scheduler_type"] = config.lr_scheduler;
    doc["optim"] = config.optimizer;
    doc["max_steps"] = config.max_steps;
    doc["dataset_format"] = "chat-jsonl (messages; final assistant message is the target)";
    return doc.dump(2) + "\n";
}

void export_training_config(std::filesystem::path const & path, TrainingConfig const & config)
{
    text::write_file_atomic(path, render_training_config(config));
}

} // namespace coachsim::sft
