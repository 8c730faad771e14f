use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use svclink::fec::{crc32, damage, RsCode, RS_INFO_SYMBOLS, RS_MOTHER_LENGTH};
use svclink::kpstream::synth_stream;
use svclink::neuralcodec::{train_stage1, TrainConfig};
use svclink::{CodecModel, MotionProfile, Stage};

fn rs(c: &mut Criterion) {
    let code = RsCode::new(RS_MOTHER_LENGTH, RS_INFO_SYMBOLS).unwrap();
    let info: Vec<u8> = (0..RS_INFO_SYMBOLS as u32).map(|i| (i * 37 + 11) as u8).collect();
    let word = code.encode(&info).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (noisy, erased) = damage(&mut rng, &word, 40, 30);
    c.bench_function("rs255_encode", |b| b.iter(|| code.encode(black_box(&info)).unwrap()));
    c.bench_function("rs255_decode_40e_30f", |b| b.iter(|| code.decode(black_box(&noisy), black_box(&erased)).unwrap()));
    c.bench_function("crc32_64B", |b| b.iter(|| crc32(black_box(&info))));
}

fn codec(c: &mut Criterion) {
    let model = CodecModel::with_defaults(1);
    let stream = synth_stream(1, 10, 2, MotionProfile::Smooth).unwrap();
    let frame = stream.frames[1].clone();
    let bits = model.encode(&frame).unwrap();
    c.bench_function("codec_encode", |b| b.iter(|| model.encode(black_box(&frame)).unwrap()));
    c.bench_function("codec_decode", |b| b.iter(|| model.decode(black_box(&bits), Stage::First).unwrap()));
}

fn training(c: &mut Criterion) {
    let model = CodecModel::with_defaults(2);
    let train: Vec<_> = (0..4).map(|s| synth_stream(s, 10, 17, MotionProfile::Smooth).unwrap()).collect();
    let cfg = TrainConfig { epochs: 1, ..TrainConfig::default() };
    let mut g = c.benchmark_group("training");
    g.sample_size(10);
    g.bench_function("stage1_epoch_64_frames", |b| b.iter(|| train_stage1(&model, &train, &[], &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, rs, codec, training);
criterion_main!(benches);
