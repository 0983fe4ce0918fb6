use clap::Parser;
use gw_service::{BackendKind, ServeArgs};

#[test]
fn flags_and_env_overrides() {
    let args = ServeArgs::try_parse_from(["gw-serve"]).unwrap();
    assert_eq!(args.bind, "127.0.0.1:8080");
    assert_eq!(args.backend, BackendKind::Ngram);
    assert_eq!(args.beam_threshold, 1500);

    let args = ServeArgs::try_parse_from([
        "gw-serve", "--bind", "0.0.0.0:9000", "--backend", "oracle", "--model-path", "truth.json", "--budget", "1024",
        "--split", "0.6", "--beam-threshold", "800",
    ])
    .unwrap();
    assert_eq!(args.backend, BackendKind::Oracle);
    let cfg = args.prompt_config().unwrap();
    assert_eq!((cfg.budget, cfg.split), (1024, 0.6));
    assert_eq!(args.decode_params().unwrap().beam_threshold_tokens, 800);

    std::env::set_var("GW_BACKEND", "remote");
    std::env::set_var("GW_BEAM_THRESHOLD", "42");
    let args = ServeArgs::try_parse_from(["gw-serve"]).unwrap();
    assert_eq!(args.backend, BackendKind::Remote);
    assert_eq!(args.beam_threshold, 42);
    assert!(args.state().is_err(), "remote without --remote-url");
    std::env::remove_var("GW_BACKEND");
    std::env::remove_var("GW_BEAM_THRESHOLD");

    assert!(ServeArgs::try_parse_from(["gw-serve", "--backend", "gpt"]).is_err());
    let bad = ServeArgs::try_parse_from(["gw-serve", "--split", "1.5"]).unwrap();
    assert!(bad.prompt_config().is_err());
}
