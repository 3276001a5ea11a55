#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace memmatch {

/// Token ids dense in [0, size); id 0 is padding, id 1 is unknown.
class Vocabulary {
  public:
    static constexpr int kPadId = 0;
    static constexpr int kUnkId = 1;

    Vocabulary();

    /// Builds from texts: tokens ranked by (count desc, token asc), capped
    /// at max_size including the two reserved ids. Deterministic.
    static Vocabulary build(const std::vector<std::string>& texts, int max_size);

    int id_for(const std::string& token) const;
    const std::string& token_for(int id) const { return id_to_token_.at(static_cast<size_t>(id)); }
    int size() const { return static_cast<int>(id_to_token_.size()); }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

  private:
    std::vector<std::string> id_to_token_;
    std::unordered_map<std::string, int> token_to_id_;
    void push(const std::string& token);
};

}  // namespace memmatch
