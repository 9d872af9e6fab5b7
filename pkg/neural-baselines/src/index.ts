export {
  BOS,
  EOS,
  HASHTAG_TOKEN,
  PAD,
  SPECIALS,
  UNK,
  URL_TOKEN,
  USER_TOKEN,
  Vocab,
  VocabError,
  detokenize,
  encodeSource,
  encodeTarget,
  tokenize,
} from "./tokens";
export { enableFastBackend } from "./backend";
export {
  DataFormatError,
  readTuplesJsonl,
  sourceText,
  writeResponsesJsonl,
} from "./data";
export type { DialogTuple, ResponseRecord } from "./data";
export { ScheduleError, lrate } from "./schedule";
export { EmbeddingError, buildEmbeddings, loadTextEmbeddings } from "./embeddings";
export type { EmbeddingMatrices, PretrainedTable } from "./embeddings";
export { Adam } from "./optim";
export {
  ConfigError,
  Seq2SeqModel,
  defaultSeq2SeqConfig,
  validateSeq2SeqConfig,
} from "./seq2seq";
export type { GreedyResult, Seq2SeqConfig, TrainingBatch } from "./seq2seq";
export {
  TransformerModel,
  defaultTransformerConfig,
  positionalEncoding,
  validateTransformerConfig,
} from "./transformer";
export type { AttentionMaps, TransformerConfig } from "./transformer";
export {
  CheckpointError,
  loadCheckpoint,
  saveCheckpoint,
  vocabFingerprint,
} from "./checkpoint";
export type { AnyModel, LoadedCheckpoint, ModelKind } from "./checkpoint";
export {
  buildBatch,
  generateFromCheckpoint,
  trainFromFiles,
} from "./pipeline";
export type { GenerateResult, TrainOptions, TrainResult } from "./pipeline";
