#include "synthetic_corpus.hpp"

#include <array>
#include <span>
#include <string>
#include <string_view>

#include "useq/random.hpp"

namespace useq::synth {

namespace {

using Words = std::span<const std::string_view>;

constexpr std::string_view kSiteWords[] = {
    "blue",     "river",   "stone",   "green",    "open",    "city",     "north",   "star",
    "maple",    "cedar",   "harbor",  "summit",   "pixel",   "cloud",    "data",    "bright",
    "little",   "golden",  "silver",  "ocean",    "forest",  "urban",    "prairie", "coastal",
    "modern",   "daily",   "global",  "local",    "smart",   "rapid",    "quiet",   "happy",
    "library",  "garden",  "kitchen", "studio",   "market",  "journal",  "review",  "weekly",
    "tribune",  "museum",  "academy", "college",  "clinic",  "bakery",   "outdoor", "travel",
    "sports",   "music",   "games",   "photo",    "design",  "tech",     "science", "health",
    "finance",  "energy",  "motors",  "homes",    "books",   "records",  "films",   "craft",
    "coffee",   "pizza",   "fitness", "yoga",     "pets",    "garage",   "systems", "labs",
    "network",  "media",   "press",   "works",    "supply",  "union",    "county",  "state",
    "valley",   "bridge",  "tower",   "lake",     "mountain", "island",  "field",   "meadow",
    "falcon",   "eagle",   "otter",   "wolf",     "bear",    "fox",      "lion",    "tiger",
};

constexpr std::string_view kLegitTlds[] = {"com", "com", "com", "com", "org", "org", "net",
                                           "edu", "gov", "io",  "co.uk", "de", "fr",  "ca",
                                           "com.au", "jp", "nl", "us"};

constexpr std::string_view kLegitSubdomains[] = {"mail", "docs", "blog", "shop",  "support",
                                                 "news", "api",  "m",    "en",    "developer",
                                                 "help", "store", "forum", "wiki", "careers"};

constexpr std::string_view kPathWords[] = {
    "about",   "products", "news",     "article",  "category", "help",    "faq",     "contact",
    "en-us",   "blog",     "posts",    "item",     "search",   "wiki",    "docs",    "user",
    "profile", "events",   "gallery",  "services", "pricing",  "team",    "careers", "press",
    "reviews", "recipes",  "tutorial", "guide",    "download", "support", "store",   "catalog",
    "history", "research", "projects", "videos",   "photos",   "archive", "library", "tags",
    "topics",  "policy",   "terms",    "sitemap",  "jobs",     "forum",   "thread",  "comments",
};

constexpr std::string_view kQueryKeys[] = {"id", "q", "page", "ref", "lang", "sort", "tag", "utm_source", "p", "cat"};

constexpr std::string_view kBrands[] = {
    "paypal",  "apple",     "amazon",   "microsoft", "netflix",   "chase",     "wellsfargo",
    "bankofamerica", "facebook", "instagram", "dropbox", "office365", "outlook", "ebay",
    "dhl",     "fedex",     "usps",     "irs",       "docusign",  "coinbase",  "binance",
    "adobe",   "linkedin",  "whatsapp", "icloud",    "yahoo",     "gmail",     "steam",
    "hsbc",    "citibank",  "santander", "americanexpress", "visa", "mastercard", "blockchain",
};

constexpr std::string_view kLureWords[] = {
    "login",    "signin",  "verify",   "secure",     "account",   "update",   "confirm",
    "webscr",   "auth",    "billing",  "recovery",   "unlock",    "suspended", "validation",
    "wallet",   "security", "alert",   "service",    "authentication", "password", "reset",
    "limited",  "access",  "identity", "payment",    "invoice",   "session",  "customer",
};

constexpr std::string_view kBadTlds[] = {"tk", "ml", "ga", "cf", "gq", "xyz", "top", "info", "ru",
                                         "cn", "buzz", "online", "site", "club", "live", "pw",
                                         "com", "net", "biz", "icu"};

constexpr std::string_view kFreeHosts[] = {"000webhostapp.com", "weebly.com",      "wixsite.com",
                                           "firebaseapp.com",   "blogspot.com",    "godaddysites.com",
                                           "web.app",           "herokuapp.com",   "glitch.me",
                                           "netlify.app",       "square.site",     "sites.google.com"};

constexpr std::string_view kShorteners[] = {"bit.ly", "tinyurl.com", "goo.gl", "ow.ly", "is.gd",
                                            "t.co", "rb.gy", "cutt.ly"};

constexpr std::string_view kCmsPaths[] = {"wp-content", "wp-includes", "wp-admin", "plugins",
                                          "themes",     "uploads",     "modules",  "images",
                                          "css",        "js",          "tmp",      "cgi-bin"};

constexpr std::string_view kScriptFiles[] = {"index.php", "login.php", "verify.html", "signin.htm",
                                             "auth.php",  "update.php", "mail.php",   "home.html",
                                             "default.aspx", "account.jsp"};

constexpr std::string_view kLegitLoginHosts[] = {
    "accounts.google.com",   "login.microsoftonline.com", "www.paypal.com", "secure.chase.com",
    "signin.ebay.com",       "appleid.apple.com",         "www.amazon.com", "login.yahoo.com",
    "www.facebook.com",      "connect.secure.wellsfargo.com", "www.linkedin.com", "id.atlassian.com",
};

constexpr std::string_view kLegitLoginPaths[] = {"signin", "login", "ap/signin", "account/login",
                                                 "signin/v2/identifier", "checkpoint", "auth",
                                                 "myaccount", "security/verify", "uas/login"};

class Builder {
public:
    explicit Builder(std::uint64_t seed) : rng_(seed) {}

    LabeledUrl legitimate(bool hard) { return {0, hard ? legit_login() : legit_site()}; }
    LabeledUrl phishing(bool hard) { return {1, hard ? compromised_site() : phish()}; }
    bool chance(double p) { return rng_.uniform01() < p; }
    Rng& rng() { return rng_; }

private:
    std::string_view pick(Words words) { return words[rng_.below(words.size())]; }
    std::size_t between(std::size_t lo, std::size_t hi) { return lo + rng_.below(hi - lo + 1); }

    std::string number(std::size_t lo, std::size_t hi) { return std::to_string(between(lo, hi)); }

    std::string hex(std::size_t len) {
        static constexpr char digits[] = "0123456789abcdef";
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s.push_back(digits[rng_.below(16)]);
        return s;
    }

    std::string alnum(std::size_t len) {
        static constexpr char chars[] = "abcdefghijklmnopqrstuvwxyz0123456789";
        std::string s;
        for (std::size_t i = 0; i < len; ++i) s.push_back(chars[rng_.below(36)]);
        return s;
    }

    std::string scheme(double https) {
        const double r = rng_.uniform01();
        if (r < 0.25) return "";
        return r < 0.25 + 0.75 * https ? "https://" : "http://";
    }

    std::string site_name() {
        std::string name(pick(kSiteWords));
        if (chance(0.6)) name += chance(0.2) ? "-" : "";
        if (name.back() == '-' || chance(0.5)) name += pick(kSiteWords);
        if (chance(0.1)) name += number(1, 99);
        return name;
    }

    std::string slug() {
        std::string s(pick(kSiteWords));
        const std::size_t extra = between(0, 3);
        for (std::size_t i = 0; i < extra; ++i) s += "-" + std::string(pick(kSiteWords));
        return s;
    }

    std::string legit_path() {
        std::string path;
        const std::size_t segments = between(0, 4);
        for (std::size_t i = 0; i < segments; ++i) {
            path += "/";
            const double r = rng_.uniform01();
            if (r < 0.55)
                path += pick(kPathWords);
            else if (r < 0.8)
                path += slug();
            else
                path += number(1, 99999);
        }
        if (!path.empty() && chance(0.2)) path += chance(0.5) ? ".html" : ".php";
        if (chance(0.25)) {
            path += "?" + std::string(pick(kQueryKeys)) + "=" +
                    (chance(0.5) ? number(1, 9999) : std::string(pick(kSiteWords)));
            if (chance(0.3)) path += "&" + std::string(pick(kQueryKeys)) + "=" + number(1, 50);
        }
        return path;
    }

    std::string legit_site() {
        std::string host;
        const double r = rng_.uniform01();
        if (r < 0.55)
            host = "www.";
        else if (r < 0.75)
            host = std::string(pick(kLegitSubdomains)) + ".";
        host += site_name() + "." + std::string(pick(kLegitTlds));
        return scheme(0.8) + host + legit_path();
    }

    std::string legit_login() {
        std::string url = "https://" + std::string(pick(kLegitLoginHosts)) + "/" +
                          std::string(pick(kLegitLoginPaths));
        if (chance(0.5)) url += "?continue=" + std::string(pick(kPathWords));
        return url;
    }

    std::string lure_host() {
        const std::string brand(pick(kBrands));
        switch (rng_.below(6)) {
            case 0: return brand + "-" + std::string(pick(kLureWords)) + "." + std::string(pick(kBadTlds));
            case 1:
                return std::string(pick(kLureWords)) + "-" + brand + "-" +
                       std::string(pick(kLureWords)) + "." + std::string(pick(kBadTlds));
            case 2:
                return brand + ".com." + std::string(pick(kLureWords)) + "-" + alnum(5) + "." +
                       std::string(pick(kBadTlds));
            case 3: return std::string(pick(kLureWords)) + "." + brand + "." + alnum(6) + "." +
                           std::string(pick(kBadTlds));
            case 4: return alnum(between(6, 12)) + "." + std::string(pick(kFreeHosts));
            default:
                return number(11, 223) + "." + number(0, 255) + "." + number(0, 255) + "." +
                       number(1, 254);
        }
    }

    std::string phish_path() {
        std::string path;
        const std::size_t segments = between(1, 4);
        for (std::size_t i = 0; i < segments; ++i) {
            path += "/";
            const double r = rng_.uniform01();
            if (r < 0.35)
                path += pick(kLureWords);
            else if (r < 0.5)
                path += pick(kBrands);
            else if (r < 0.65)
                path += hex(between(8, 32));
            else if (r < 0.8)
                path += pick(kCmsPaths);
            else
                path += alnum(between(3, 8));
        }
        if (chance(0.5)) path += "/" + std::string(pick(kScriptFiles));
        if (chance(0.3))
            path += "?" + std::string(chance(0.5) ? "cmd" : "session") + "=" + hex(between(16, 40));
        return path;
    }

    std::string phish() {
        const double r = rng_.uniform01();
        if (r < 0.08)
            return scheme(0.3) + std::string(pick(kShorteners)) + "/" + alnum(between(5, 8));
        if (r < 0.16)
            return "http://" + std::string(pick(kBrands)) + ".com@" + lure_host() + phish_path();
        return scheme(0.35) + lure_host() + phish_path();
    }

    // Compromised ordinary sites: the host looks legitimate and the path only
    // sometimes carries an obvious lure.
    std::string compromised_site() {
        std::string host = (chance(0.5) ? "www." : "") + site_name() + "." +
                           std::string(pick(kLegitTlds));
        std::string path = "/" + std::string(pick(kCmsPaths));
        if (chance(0.6)) path += "/" + std::string(pick(kCmsPaths));
        path += "/" + alnum(between(3, 10));
        if (chance(0.5))
            path += "/" + std::string(pick(kScriptFiles));
        else
            path += "/" + std::string(pick(kPathWords));
        return scheme(0.4) + host + path;
    }

    Rng rng_;
};

}  // namespace

std::vector<LabeledUrl> generate_corpus(const CorpusOptions& options) {
    Builder builder(options.seed);
    std::vector<LabeledUrl> records;
    records.reserve(options.legitimate + options.phishing);
    for (std::size_t i = 0; i < options.legitimate; ++i)
        records.push_back(builder.legitimate(builder.chance(options.hard_fraction)));
    for (std::size_t i = 0; i < options.phishing; ++i)
        records.push_back(builder.phishing(builder.chance(options.hard_fraction)));
    for (auto& r : records)
        if (builder.chance(options.label_noise)) r.label = static_cast<std::uint8_t>(1 - r.label);
    builder.rng().shuffle(std::span<LabeledUrl>(records));
    return records;
}

}  // namespace useq::synth
