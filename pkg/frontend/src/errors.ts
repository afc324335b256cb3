/**
 * Errors crossing the process boundary keep their original names: the CLI
 * prints `error: <Name>: <message>` on stderr, and we rethrow with that
 * exact name so pipeline code can match on `err.name`.
 */

export class PipelineError extends Error {
  readonly exitCode: number;

  constructor(name: string, message: string, exitCode: number) {
    super(message);
    this.name = name;
    this.exitCode = exitCode;
  }
}

const ERROR_LINE = /^error: ([A-Za-z]+): (.*)$/m;

/** Build a PipelineError from CLI stderr, preserving the typed name. */
export function errorFromStderr(stderr: string, exitCode: number): PipelineError {
  const match = ERROR_LINE.exec(stderr);
  if (match) {
    return new PipelineError(match[1], match[2], exitCode);
  }
  const tail = stderr.trim().split("\n").slice(-3).join("\n");
  return new PipelineError("CliFailure", tail || `exit code ${exitCode}`, exitCode);
}
