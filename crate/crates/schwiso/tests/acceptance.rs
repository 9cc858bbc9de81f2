use schwiso::verify;

#[test]
fn acceptance() {
    let results = verify::run_all(0);
    let mut all = true;
    for r in &results {
        println!(
            "criterion {:02} {}: {} - {}",
            r.id,
            r.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        );
        all &= r.pass;
    }
    assert!(all, "at least one acceptance check failed");
}
