use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svclink::fec::{crc32, crc_check, damage, RsCode, RS_INFO_SYMBOLS, RS_MOTHER_LENGTH};

fn info(seed: u8) -> Vec<u8> {
    (0..RS_INFO_SYMBOLS).map(|i| (i as u8).wrapping_mul(73).wrapping_add(seed)).collect()
}

#[test]
fn every_pattern_inside_the_radius_decodes() {
    let code = RsCode::new(RS_MOTHER_LENGTH, RS_INFO_SYMBOLS).unwrap();
    let top = code.parity();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for e in (0..=top / 2).step_by(19) {
        for f in [0, (top - 2 * e) / 2, top - 2 * e] {
            for t in 0..50u8 {
                let msg = info(t);
                let word = code.encode(&msg).unwrap();
                let (noisy, erased) = damage(&mut rng, &word, e, f);
                let (out, ok) = code.decode(&noisy, &erased).unwrap();
                assert!(ok, "e={e} f={f}");
                assert_eq!(&out[..RS_INFO_SYMBOLS], &msg[..], "e={e} f={f}");
            }
        }
    }
}

#[test]
fn punctured_codes_share_the_mother_code() {
    // Erasing the tail of the mother codeword is the same as sending only the prefix.
    let code = RsCode::new(RS_MOTHER_LENGTH, RS_INFO_SYMBOLS).unwrap();
    let msg = info(3);
    let word = code.encode(&msg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut noisy, mut erased) = damage(&mut rng, &word[..127], 31, 0);
    noisy.resize(RS_MOTHER_LENGTH, 0);
    erased.resize(RS_MOTHER_LENGTH, true);
    let (out, ok) = code.decode(&noisy, &erased).unwrap();
    assert!(ok);
    assert_eq!(&out[..RS_INFO_SYMBOLS], &msg[..]);
}

#[test]
fn beyond_the_radius_failure_is_reported() {
    // 120 errors against a 95-error radius: the decoder must give up, not miscorrect.
    let code = RsCode::new(RS_MOTHER_LENGTH, RS_INFO_SYMBOLS).unwrap();
    let msg = info(9);
    let word = code.encode(&msg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let (noisy, erased) = damage(&mut rng, &word, 120, 0);
        let (out, ok) = code.decode(&noisy, &erased).unwrap();
        assert!(!ok);
        assert_eq!(&out[..], &noisy[..RS_INFO_SYMBOLS]);
    }
}

#[test]
fn crc_tag_travels_with_the_block() {
    let msg = info(4);
    let body = &msg[..RS_INFO_SYMBOLS - 4];
    let tag = crc32(body);
    assert!(crc_check(body, tag));
    let mut flipped = body.to_vec();
    flipped[17] ^= 0x20;
    assert!(!crc_check(&flipped, tag));
}
