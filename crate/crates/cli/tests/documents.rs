use dgtwist::dgcat::{build_s, opposite};
use dgtwist::gen;
use dgtwist::twisted::TwistedMorphism;
use dgtwist_cli::doc::{CategoryDoc, FunctorDoc, MorphismDoc, TwistedDoc};
use dgtwist_cli::{parse_document, to_text, Document};
use proptest::prelude::*;

fn reparse(d: &Document) -> Document {
    parse_document(&to_text(&d.to_value())).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn categories_and_complexes_roundtrip(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let s = gen::random_bb_sample(&mut rng, 2, 2, 2).unwrap();
        for c in [(*s.bb).clone(), opposite(&s.negative)] {
            let d = Document::Category(CategoryDoc::from_category(&c));
            let Document::Category(back) = reparse(&d) else { panic!() };
            prop_assert_eq!(back.to_category().unwrap(), c);
        }
        let c = &s.negative;
        let x = gen::random_twisted(&mut rng, c, -1, 2, 4);
        let Document::Twisted(t) = reparse(&Document::Twisted(TwistedDoc::new(c, &x))) else { panic!() };
        prop_assert_eq!(t.resolve().unwrap().complex, x.clone());
        let id = TwistedMorphism::identity(c, &x);
        let Document::Morphism(m) = reparse(&Document::Morphism(MorphismDoc::new(c, &x, &x, &id))) else { panic!() };
        prop_assert_eq!(m.resolve().unwrap().morphism, id);
        let Document::Functor(f) = reparse(&Document::Functor(FunctorDoc::from_functor(&s.realization))) else { panic!() };
        let back = f.resolve().unwrap().data;
        prop_assert_eq!(&back.objects, &s.realization.objects);
        prop_assert_eq!(&back.maps, &s.realization.maps);
    }

    #[test]
    fn path_categories_roundtrip(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let (a, _) = gen::random_path_category(&mut rng, 3, 4);
        let c = build_s(&a);
        let text = to_text(&Document::Category(CategoryDoc::from_category(&c)).to_value());
        let Document::Category(back) = parse_document(&text).unwrap() else { panic!() };
        prop_assert_eq!(back.to_category().unwrap(), c);
    }
}

#[test]
fn integers_may_be_numbers_on_input() {
    let text = r#"{"kind":"category","schema_version":1,"objects":["e"],"homs":[{"source":"e","target":"e","degree":0,"labels":["id"]}],
        "compositions":[{"path":["e","e","e"],"first":[0,0],"then":[0,0],"result":[[0,1]]}],"identities":[{"object":"e","coeffs":[1]}]}"#;
    let Document::Category(d) = parse_document(text).unwrap() else { panic!() };
    let c = d.to_category().unwrap();
    assert!(dgtwist::dgcat::validate_dg(&c).is_valid());
    assert!(to_text(&Document::Category(d).to_value()).contains("\"1\""));
}
