export { Rng } from "./rng";
export { Complex2D, circleMask, dft2c, gridCenter, scalePointwise, weightMatrix, zeros } from "./grid";
export { Activation, Adam, Layer, LayerShape, Mlp } from "./mlp";
export { decodeWeights, encodeWeights, quantized } from "./weights";
export { DEFAULT_SPEC, Dataset, DatasetKind, ScheduleSpec, TrainSpec, TransformSpec, makeDataset, sigmaLadder, transformFactors } from "./data";
export { Draw, Scorer, drawLoss, lossOverDraws, makeDraw, packInput } from "./dsm";
export { EvalReport, TrainResult, buildModel, evalDraws, evaluate, modelScorer, train } from "./train";
export { runCli } from "./cli";
