#include "coachsim/engine.hpp"

#include "coachsim/error.hpp"
#include "coachsim/text.hpp"

#include <algorithm>
#include <fstream>

namespace coachsim::dialogue {

SessionStore::SessionStore(std::filesystem::path data_dir)
: sessions_dir_(data_dir / "sessions")
, index_path_(data_dir / "index.jsonl")
{
    std::error_code ec;
    std::filesystem::create_directories(sessions_dir_, ec);
    if (ec) {
        throw ConfigError("cannot create data directory " + sessions_dir_.string() + ": " + ec.message());
    }
}

std::filesystem::path SessionStore::session_path(std::string const & id) const
{
    return sessions_dir_ / (id + ".json");
}

void SessionStore::save(DialogueSession const & session)
{
    if (session.id.empty() || session.id.find_first_of("/\\.") != std::string::npos) {
        throw ValidationError("invalid session id '" + session.id + "'");
    }
    text::write_file_atomic(session_path(session.id), serialize_session(session));

    nlohmann::ordered_json record;
    record["id"] = session.id;
    record["status"] = std::string(to_string(session.status));
    record["updated_at"] = format_iso8601(session.updated_at);
    std::lock_guard lock(index_mutex_);
    std::ofstream out(index_path_, std::ios::app);
    out << record.dump() << "\n";
}

std::vector<DialogueSession> SessionStore::load_all() const
{
    std::vector<std::filesystem::path> files;
    for (auto const & entry : std::filesystem::directory_iterator(sessions_dir_)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<DialogueSession> sessions;
    for (auto const & file : files) {
        try {
            sessions.push_back(parse_session(text::read_file(file)));
        } catch (FormatError const & e) {
            throw FormatError(file.string() + ": " + e.what(), e.index());
        }
    }
    return sessions;
}

} // namespace coachsim::dialogue
