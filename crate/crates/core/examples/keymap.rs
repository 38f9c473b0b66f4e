//! Map string keys to database indices so a client can query by key.

use spider_pir::keymap::KeyMap;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "mallory\nalice\n\ncarol\nbob\n";
    let map = KeyMap::parse_keys(text)?;
    for (i, key) in map.iter() {
        println!("{i}\t{key}");
    }
    println!("bob lives at index {:?}", map.lookup("bob"));

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("keys.map");
    map.save(&path)?;
    assert_eq!(KeyMap::load(&path)?.lookup("carol"), map.lookup("carol"));

    match KeyMap::parse_keys("a\nb\na\n") {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
