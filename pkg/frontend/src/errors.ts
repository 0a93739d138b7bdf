export class MissingFile extends Error {
  constructor(path: string) {
    super(`input file not found: ${path}`);
    this.name = "MissingFile";
  }
}

export class SchemaMismatch extends Error {
  constructor(message: string) {
    super(message);
    this.name = "SchemaMismatch";
  }
}
