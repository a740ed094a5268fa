use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use tmpc::division::{div_pub_active_scaled, div_pub_rep, div_pub_signed, ActiveOffset};
use tmpc::protocols::{convert_to_add, convert_to_rep};
use tmpc::report::{parse_line, Report};
use tmpc::sharefile::ShareFile;
use tmpc::sharing::{reconstruct_add, reconstruct_rep, share_rep};
use tmpc::{run_local, Field, LocalConfig, RepShare, Security};

const F: Field = Field::M61;

fn open(o: &[RepShare; 3]) -> Vec<u64> {
    reconstruct_rep(&F, &[&o[0], &o[1], &o[2]], Security::Active).unwrap()
}

fn shared(vals: &[u64], seed: u64) -> [RepShare; 3] {
    share_rep(&F, vals, &mut ChaCha20Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn division_lands_in_three_values(vals in prop::collection::vec(0u64..1 << 60, 1..40), d in 2u64..1 << 30, seed: u64) {
        let sh = shared(&vals, seed);
        let run = run_local(&LocalConfig::new(F, seed), |p| div_pub_rep(p, &sh[p.id.index()], d)).unwrap();
        for (c, a) in open(&run.outputs).into_iter().zip(&vals) {
            let dev = c.wrapping_sub(a / d);
            prop_assert!(dev <= 2, "a={a} d={d} out={c}");
        }
    }

    #[test]
    fn signed_division_lands_in_three_values(vals in prop::collection::vec(-(1i64 << 58)..1 << 58, 1..40), d in 2u64..1 << 20, seed: u64) {
        let enc: Vec<u64> = vals.iter().map(|&v| F.from_i64(v)).collect();
        let sh = shared(&enc, seed);
        let run = run_local(&LocalConfig::new(F, seed), |p| div_pub_signed(p, &sh[p.id.index()], d)).unwrap();
        for (c, a) in open(&run.outputs).into_iter().zip(&vals) {
            let dev = F.to_i64(c) - a.div_euclid(d as i64);
            prop_assert!((0..=2).contains(&dev), "a={a} d={d} out={}", F.to_i64(c));
        }
    }

    #[test]
    fn active_division_is_within_two(vals in prop::collection::vec(0u64..1 << 56, 1..20), d in 2u64..1 << 20, seed: u64) {
        let sh = shared(&vals, seed);
        let cfg = LocalConfig::new(F, seed).active();
        let run = run_local(&cfg, |p| div_pub_active_scaled(p, &sh[p.id.index()], d, ActiveOffset::Centred)).unwrap();
        for (c, a) in open(&run.outputs).into_iter().zip(&vals) {
            let err = (F.to_i64(c) as f64 - *a as f64 / d as f64).abs();
            prop_assert!(err <= 2.0, "a={a} d={d} out={c}");
        }
    }

    #[test]
    fn conversions_preserve_the_secret(vals in prop::collection::vec(0u64..(1 << 61) - 1, 1..64), seed: u64) {
        let sh = shared(&vals, seed);
        let n = vals.len();
        let run = run_local(&LocalConfig::new(F, seed), |p| {
            let add = convert_to_add(&p.field, &sh[p.id.index()]);
            let rep = convert_to_rep(p, &add, n)?;
            Ok((add, rep))
        })
        .unwrap();
        let o = &run.outputs;
        prop_assert_eq!(&reconstruct_add(&F, &[&o[0].0, &o[1].0]).unwrap(), &vals);
        prop_assert_eq!(&open(&[o[0].1.clone(), o[1].1.clone(), o[2].1.clone()]), &vals);
    }

    #[test]
    fn share_files_round_trip(vals in prop::collection::vec(0u64..8191, 0..50), offset in -30i32..30, seed: u64) {
        let f = Field::M8191;
        let sh = share_rep(&f, &vals, &mut ChaCha20Rng::seed_from_u64(seed));
        for s in sh {
            let file = ShareFile::rep(&f, s, offset, 1);
            let bytes = file.encode();
            prop_assert_eq!(ShareFile::decode(&bytes).unwrap(), file);
            prop_assert!(ShareFile::decode(&bytes[..bytes.len() - 1]).is_err());
        }
    }

    #[test]
    fn report_lines_parse_back(values in prop::collection::vec("[a-z0-9 ._=-]{0,12}", 1..6)) {
        let mut r = Report::new("prop");
        {
            let mut line = r.line("row");
            for (i, v) in values.iter().enumerate() {
                line = line.kv(&format!("k{i}"), v);
            }
        }
        let (kind, kv) = parse_line(&r.lines()[1]).unwrap();
        prop_assert_eq!(kind, "row");
        let got: Vec<String> = kv.into_iter().map(|(_, v)| v).collect();
        prop_assert_eq!(got, values);
    }
}
