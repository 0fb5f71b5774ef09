#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "pledgetracker/dates.hpp"

namespace pledgetracker::html {

struct ExtractedPage {
    std::string title;
    std::optional<Date> publication_date;
    std::string body;  // paragraphs separated by blank lines
};

/// Main-text extraction for news-style pages. Drops script/style/navigation
/// chrome, prefers paragraphs inside <article>/<main>, and reads the
/// publication date from page metadata (meta tags, JSON-LD, <time>). The date
/// stays empty when no metadata carries one.
ExtractedPage extract_main_text(std::string_view html);

/// Decodes named (&amp; &lt; &gt; &quot; &apos; &nbsp; ...) and numeric entities.
std::string decode_entities(std::string_view s);

}  // namespace pledgetracker::html
