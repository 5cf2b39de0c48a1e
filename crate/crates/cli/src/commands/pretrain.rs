//! `pretrain`: masked-language-model training with periodic checkpoints and
//! resume.

use legal_lm::encoder::TokenizerFiles;
use legal_lm::tokenizer::{load_tokenizer, render_files};
use legal_lm::training::{
    pretrain_from, read_history_csv, smoothed_loss, write_history_csv, HistoryRow, PretrainCorpus, PretrainRecord, PretrainState,
};
use log::info;

use super::{build_time, create_dir, load_checkpoint, pretraining_texts, require};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::layout::Layout;

pub fn run(cfg: &PipelineConfig, resume: bool) -> Result<()> {
    let layout = Layout::new(&cfg.paths.output_dir);
    require(&layout.tokenizer(), "tokenizer (run `train-tokenizer` first)")?;
    let tokenizer = load_tokenizer(&layout.tokenizer())?;
    let encoder = cfg.encoder(tokenizer.vocab_size())?;
    let config = cfg.pretrain_config(encoder.clone());
    config.validate()?;
    if let Some(init) = &config.init_checkpoint {
        require(init, "initial checkpoint")?;
    }
    let texts = pretraining_texts(cfg, &layout)?;
    let corpus = PretrainCorpus::from_texts(&texts, &tokenizer, config.sequence_length)?;
    info!("{} windows of {} tokens", corpus.len(), config.sequence_length);
    let (vocab_json, merges_txt) = render_files(&tokenizer)?;
    let files = TokenizerFiles { vocab_json, merges_txt };

    create_dir(&layout.pretrain())?;
    let history_path = layout.pretrain().join("history.csv");
    let latest = if resume { layout.pretrain_checkpoints().pop() } else { None };
    let (start, prior) = match latest {
        Some((step, path)) => {
            info!("resuming from {} (step {step})", path.display());
            let state = PretrainState::from_checkpoint(load_checkpoint(&path)?)?;
            if state.params.config != encoder {
                return Err(legal_lm::Error::ConfigMismatch(format!(
                    "{} was trained with {:?}, configured {:?}",
                    path.display(),
                    state.params.config,
                    encoder
                ))
                .into());
            }
            require(&history_path, "loss history of the interrupted run")?;
            let prior: Vec<HistoryRow> = read_history_csv(&history_path)?
                .into_iter()
                .filter(|r| r.step_or_epoch <= step)
                .collect();
            if prior.len() as u64 != step {
                return Err(legal_lm::Error::InvalidConfig(format!(
                    "{} holds {} rows up to step {step}",
                    history_path.display(),
                    prior.len()
                ))
                .into());
            }
            (state, prior)
        }
        None => (PretrainState::initial(&config)?, Vec::new()),
    };

    let save = |state: &PretrainState, path: &std::path::Path| -> legal_lm::Result<()> {
        let mut ck = state.to_checkpoint(config.seed);
        ck.tokenizer = Some(files.clone());
        ck.metadata.created_unix = build_time();
        ck.metadata.extra.insert("stage".into(), "pretrain".into());
        ck.save(path)
    };
    let mut on_checkpoint = |state: &PretrainState, history: &[PretrainRecord]| {
        let step = state.optimizer.step;
        save(state, &layout.pretrain_checkpoint(step))?;
        let rows: Vec<HistoryRow> = prior.iter().copied().chain(history.iter().map(HistoryRow::from)).collect();
        write_history_csv(&history_path, &rows)?;
        info!("checkpoint at step {step}");
        Ok(())
    };
    let run = pretrain_from(&corpus, &config, &tokenizer, start, &mut on_checkpoint)?;
    save(&run.state, &layout.pretrain_final())?;

    let end = run.state.optimizer.step;
    let records: Vec<PretrainRecord> = prior
        .iter()
        .map(|r| PretrainRecord {
            step: r.step_or_epoch,
            loss: r.train_loss,
            masked_tokens: 1,
            learning_rate: r.learning_rate,
        })
        .chain(run.history.iter().copied())
        .collect();
    match smoothed_loss(&records, end, 100) {
        Some(loss) => println!("pre-trained {end} steps; mean loss over the last 100 steps {loss:.4}"),
        None => println!("pre-trained {end} steps"),
    }
    Ok(())
}
