use histcoord::codec::{decode_geometry, flatten_geometry, parse_literal};
use histcoord::extractor::{
    classify_has_coordinates, detect_meridian, extract_entry, ExtractionRuleSet,
};
use histcoord::{Entry, MeridianRef};

const AAHUS: &str = "* AAHUS, s. petite ville d’Allemagne dans le cercle de Westphalie, capitale de la Comté d’Aahus. Long. 24. 36. lat. 52. 10.";
const AGRIGNON: &str = "* AGRIGNON, (Géog.) l’une des îles des Larrons ou Mariannes. Lat. 19. 40.";
const ABISSINIE: &str =
    "* ABISSINIE, s. f. grand Pays & Royaume d’Afrique. Long. 48-65. lat. 6-20.";
const AMUR: &str = "* AMUR ou AMOER, riviere de la grande Tartarie en Asie ; elle a sa source près du lac Baycal, vers le 117. degré de longitude, & se jette dans l’Océan oriental au 55. degré de latitude septentrionale, & le 152. de longitude...";
const AVA: &str = "* AVA, (Géog. mod.) royaume d’Asie, sur la riviere de même nom, au-delà du Gange, sur le golfe de Bengale. Ava en est la capitale ; sa longitude est 114, & sa latit. 21. Il y a au Japon un royaume du même nom, dont la capitale s’appelle aussi Ava : ce royaume est renfermé dans une île [...]. long. 151, 10, lat. 33. Ava, autre royaume du Japon, avec une ville de même nom, dans la presqu’île de Niphon. Long. 159, lat. 35, 20.";
const AUTAN: &str = "* AUTAN-KELURAN, (Géog.) ville du Turquestan. Long. 110d. & lat. 46. 45. selon Uluhbeg ; & long. 116. & lat. 45. selon Nassiredden.";
const FONING: &str = "FONING, (Géog.) cité de la Chine dans la province de Fokien. Long. 4. 0. latit. 26. 33. suivant le P. Martini qui place le premier méridien au palais de Peking.";

fn run(head: &str, text: &str) -> String {
    let rules = ExtractionRuleSet::default();
    let entry = Entry::new(head, head, text);
    assert!(classify_has_coordinates(&entry, &rules));
    let x = extract_entry(&entry, &rules);
    assert!(x.diagnostics.is_empty(), "{head}: {:?}", x.diagnostics);
    flatten_geometry(&x.geometry.expect("geometry"))
}

#[test]
fn point() {
    assert_eq!(run("AAHUS", AAHUS), r#"[["52 10' N 24 36' E"]]"#);
}

#[test]
fn latitude_only() {
    assert_eq!(run("AGRIGNON", AGRIGNON), r#"[["19 40' N"]]"#);
}

#[test]
fn rectangle() {
    assert_eq!(run("ABISSINIE", ABISSINIE), "[['6 N 48 E', '20 N 65 E']]");
}

#[test]
fn river_chain() {
    assert_eq!(run("AMUR", AMUR), "[['pchain'], ['117 E'], ['55 N 152 E']]");
}

#[test]
fn subentries() {
    assert_eq!(
        run("AVA", AVA),
        r#"[['subart'], ['21 N 114 E'], ["33 N 151 10' E"], ["35 20' N 159 E"]]"#
    );
}

#[test]
fn multiple_sources() {
    assert_eq!(
        run("AUTAN-KELURAN", AUTAN),
        r#"[['multsrc'], ["46 45' N 110 E"], ['45 N 116 E']]"#
    );
}

#[test]
fn named_meridian() {
    let rules = ExtractionRuleSet::default();
    assert_eq!(run("FONING", FONING), r#"[["26 33' N 4 0' E"]]"#);
    let foning = Entry::new("FONING", "FONING", FONING);
    assert_eq!(detect_meridian(&foning, &rules), vec![MeridianRef::Pekin]);
    let aahus = Entry::new("AAHUS", "AAHUS", AAHUS);
    assert!(detect_meridian(&aahus, &rules).is_empty());
}

#[test]
fn gold_strings_without_source_text() {
    for gold in [
        r#"[["55 50' N 28 50' E", "56 50' N 29 26' E"]]"#,
        r#"[['multsrc'], ['50 N 39 40\' 11" E'], ["51 55' N 33 50' E"]]"#,
    ] {
        let g = decode_geometry(&parse_literal(gold).unwrap()).unwrap();
        assert_eq!(flatten_geometry(&g), gold);
    }
}
