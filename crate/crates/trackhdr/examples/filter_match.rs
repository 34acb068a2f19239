//! Filter-rule parsing and hostname matching up close: pattern syntax,
//! first-match precedence, exception rules, and the index fast path.
//!
//! Run with: `cargo run --example filter_match`

use trackhdr::filterlist::parse_filter_list;

const LIST: &str = "\
! demo rules, one per flavor
||tracker.example^
||ads.*.shop.example^
|https://exact.example/
/bea[0-9]+con/
@@||tracker.example^$~third-party
analytics.
##.cosmetic-rule-ignored
||payload.example^$script
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let filters = parse_filter_list(LIST);
    println!(
        "parsed {} rules ({} skipped: {} comments, {} cosmetic, {} inapplicable-option)",
        filters.rules.len(),
        filters.diagnostics.total_skipped(),
        filters.diagnostics.comments,
        filters.diagnostics.cosmetic,
        filters.diagnostics.inapplicable_options,
    );
    for (i, rule) in filters.rules.iter().enumerate() {
        println!("  [{i}] {}{}", if rule.is_exception { "exception " } else { "" }, rule.raw_text);
    }

    let hosts = [
        "tracker.example",
        "sub.tracker.example",
        "nottracker.example",
        "ads.eu.shop.example",
        "exact.example",
        "bea77con.example",
        "analytics.vendor.example",
        "www.analytics.example",
        "clean.example",
    ];
    println!("\nhostname matching (first matching rule wins):");
    for host in hosts {
        let m = filters.match_hostname(host)?;
        match m.first_rule {
            Some(idx) => println!("  {host:<28} -> rule [{idx}] {}", filters.rules[idx].raw_text),
            None => println!("  {host:<28} -> no match"),
        }
    }

    // Exception rules (@@) flip a block into a pass when honored.
    println!("\nwith exception rules honored:");
    for host in ["tracker.example", "sub.tracker.example"] {
        let plain = filters.match_hostname(host)?;
        let honored = filters.match_hostname_with_exceptions(host)?;
        println!(
            "  {host:<28} blocked={} -> blocked={}",
            plain.matched, honored.matched
        );
    }

    // The first-label index and the full scan agree on every input; the
    // index only prunes candidates.
    println!("\nindex vs. linear scan:");
    for host in hosts {
        let fast = filters.match_hostname(host)?;
        let slow = filters.match_hostname_scan(host)?;
        assert_eq!(fast, slow);
    }
    println!("  agreed on all {} hostnames", hosts.len());
    Ok(())
}
