//! `tag`: convert, validate, render and summarize annotation documents, and
//! run or talk to the HTTP service.
//!
//! Work runs on the local engine unless `--server URL` is given, in which
//! case inputs are uploaded and every step goes through the service.

use std::fmt;
use std::io::{self, Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};

use tag_client::{Client, ClientError};
use tag_core::api::{resolve_select, Upload, ViewQuery};
use tag_core::edit::{DiffLog, Session};
use tag_core::format::files::find_taxonomy;
use tag_core::format::{parse_taxonomy, serialize, Report, Serialized};
use tag_core::graph::{Document, Severity, SourceFormat, Taxonomy};
use tag_core::render::{render_document, render_tree_svg, StyleSheet};
use tag_core::tree::extract_tree;
use tag_service::{entry_ids, ServerConfig, DEFAULT_ROW_WIDTH};

#[derive(Debug, Parser)]
#[command(name = "tag", version, about = "Annotation graph tools")]
struct Cli {
    /// Send work to a running service instead of the local engine.
    #[arg(long, global = true, env = "TAG_SERVER", value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InputArgs {
    /// Input file, or `-` for stdin (needs --from). For BRAT give either
    /// half of the .txt/.ann pair.
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    from: Option<SourceFormat>,
    /// Which document of a multi-document BioC file.
    #[arg(long)]
    doc: Option<String>,
    /// Taxonomy file; defaults to `<stem>.tax` or `taxonomy.tax` beside the input.
    #[arg(long)]
    taxonomy: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert between BRAT, CoNLL-X and BioC. The loss report goes to stderr.
    Convert {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        to: SourceFormat,
        /// Output path (`-` or omitted: stdout). BRAT writes OUT.txt and OUT.ann.
        output: Option<PathBuf>,
    },
    /// Report every invariant violation.
    Validate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Render the annotation view as SVG.
    Render {
        #[command(flatten)]
        input: InputArgs,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        no_syntax: bool,
        #[arg(long, conflicts_with = "no_syntax")]
        no_semantics: bool,
    },
    /// Summary tree below one element, as SVG or JSON.
    Tree {
        #[command(flatten)]
        input: InputArgs,
        /// Element id, or `token:N`.
        #[arg(long)]
        select: String,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Serve a data folder over HTTP.
    Serve {
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, default_value_t = DEFAULT_ROW_WIDTH)]
        row_width: f64,
    },
    /// Apply a diff file to its base document.
    Replay {
        #[command(flatten)]
        input: InputArgs,
        diff: PathBuf,
        #[arg(short, long, default_value = "-")]
        output: PathBuf,
    },
}

/// A usage problem found after argument parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

fn read_text(path: &Path) -> Result<String> {
    if is_stdio(path) {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    if is_stdio(path) {
        io::stdout().write_all(text.as_bytes())?;
        return Ok(());
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// An input read into memory, ready to parse locally or upload.
struct Source {
    upload: Upload,
    doc: Option<String>,
}

impl Source {
    fn read(args: &InputArgs) -> Result<Source> {
        let path = &args.input;
        let stdin = is_stdio(path);
        let format = match (args.from, stdin) {
            (Some(f), _) => f,
            (None, true) => return Err(usage("reading stdin needs --from")),
            (None, false) => tag_core::format::files::detect(path)
                .ok_or_else(|| usage(format!("cannot tell the format of {}; use --from", path.display())))?,
        };
        let id = if stdin {
            "stdin".to_string()
        } else {
            path.file_stem().and_then(|s| s.to_str()).unwrap_or("document").to_string()
        };
        let mut upload = Upload { id, format: Some(format), ..Upload::default() };
        if format == SourceFormat::Brat {
            if stdin {
                return Err(usage("BRAT input needs a file path"));
            }
            upload.txt = Some(read_text(&path.with_extension("txt"))?);
            upload.ann = Some(read_text(&path.with_extension("ann"))?);
        } else {
            upload.content = Some(read_text(path)?);
        }
        let tax_path = args.taxonomy.clone().or_else(|| if stdin { None } else { find_taxonomy(path) });
        if let Some(t) = tax_path {
            upload.taxonomy = Some(read_text(&t)?);
        }
        Ok(Source { upload, doc: args.doc.clone() })
    }

    fn taxonomy(&self) -> Result<Option<Taxonomy>> {
        let Some(text) = &self.upload.taxonomy else { return Ok(None) };
        Ok(Some(parse_taxonomy(Some(&self.upload.id), text)?))
    }

    /// Parses locally and picks the requested document.
    fn parse(&self) -> Result<(Document, Report)> {
        let (_, docs, report) = self.upload.parse()?;
        let ids = entry_ids(&self.upload.id, &docs);
        let pick = match &self.doc {
            None => 0,
            Some(want) => docs
                .iter()
                .zip(&ids)
                .position(|(d, e)| &d.id == want || e == want)
                .ok_or_else(|| anyhow!("no document {want} in {}", self.upload.id))?,
        };
        let doc = docs.into_iter().nth(pick).ok_or_else(|| anyhow!("{} holds no documents", self.upload.id))?;
        Ok((doc, report))
    }

    /// Uploads to the service and returns the entry id to address.
    async fn upload(&self, client: &Client) -> Result<String> {
        let resp = client.upload(&self.upload).await?;
        print_report(&resp.report);
        let entry = match &self.doc {
            None => resp.entries.first(),
            Some(want) => resp.entries.iter().find(|e| &e.id == want || e.id.ends_with(&format!("-{want}"))),
        };
        entry.map(|e| e.id.clone()).ok_or_else(|| anyhow!("document not found after upload"))
    }
}

fn print_report(report: &Report) {
    for line in report.lines() {
        eprintln!("{line}");
    }
}

/// Writes a serialized document; BRAT needs a path and gets two files.
fn write_document(output: Option<&Path>, files: &[(String, String)]) -> Result<()> {
    let output = output.filter(|p| !is_stdio(p));
    match (files, output) {
        ([(_, single)], None) => write_out(Path::new("-"), single),
        ([(_, single)], Some(path)) => write_out(path, single),
        (_, None) => Err(usage("BRAT output needs a file path")),
        (pair, Some(path)) => {
            for (ext, text) in pair {
                write_out(&path.with_extension(ext), text)?;
            }
            Ok(())
        }
    }
}

fn files_of(out: Serialized) -> Vec<(String, String)> {
    match out {
        Serialized::Brat { txt, ann } => vec![("txt".into(), txt), ("ann".into(), ann)],
        Serialized::Single(s) => vec![(String::new(), s)],
    }
}

fn view_query(width: Option<f64>, no_syntax: bool, no_semantics: bool) -> ViewQuery {
    ViewQuery { width, rows: None, hide_syntax: no_syntax, hide_semantics: no_semantics }
}

async fn run(cli: Cli) -> Result<ExitCode> {
    let client = cli.server.as_deref().map(Client::new).transpose()?;
    match cli.command {
        Command::Convert { input, to, output } => {
            let src = Source::read(&input)?;
            let files = match &client {
                None => {
                    let (doc, report) = src.parse()?;
                    print_report(&report);
                    let (out, report) = serialize(&doc, to)?;
                    print_report(&report);
                    files_of(out)
                }
                Some(c) => {
                    let id = src.upload(c).await?;
                    let resp = c.export(&id, Some(to)).await?;
                    print_report(&resp.report);
                    // BRAT comes back keyed txt, ann in that order
                    resp.files.into_iter().rev().collect()
                }
            };
            write_document(output.as_deref(), &files)?;
        }
        Command::Validate { input } => {
            let src = Source::read(&input)?;
            let issues = match &client {
                None => {
                    let (doc, report) = src.parse()?;
                    print_report(&report);
                    doc.validate()
                }
                Some(c) => {
                    let id = src.upload(c).await?;
                    c.validate(&id).await?.issues
                }
            };
            for issue in &issues {
                println!("{issue}");
            }
            if issues.iter().any(|i| i.severity == Severity::Error) {
                return Ok(ExitCode::from(1));
            }
            println!("ok");
        }
        Command::Render { input, output, width, no_syntax, no_semantics } => {
            let src = Source::read(&input)?;
            let view = view_query(width, no_syntax, no_semantics);
            let svg = match &client {
                None => {
                    let (doc, report) = src.parse()?;
                    print_report(&report);
                    render_document(&doc, src.taxonomy()?.as_ref(), &view.view_config(DEFAULT_ROW_WIDTH))?
                }
                Some(c) => {
                    let id = src.upload(c).await?;
                    c.svg(&id, &view).await?
                }
            };
            write_out(&output, &svg)?;
        }
        Command::Tree { input, select, output, json } => {
            let src = Source::read(&input)?;
            let text = match &client {
                None => {
                    let (doc, _) = src.parse()?;
                    let anchor = resolve_select(&doc, &select).ok_or_else(|| anyhow!("unknown element {select}"))?;
                    let tree = extract_tree(&doc, &anchor)?;
                    if json {
                        serde_json::to_string_pretty(&tree)? + "\n"
                    } else {
                        let cfg = ViewQuery::default().view_config(DEFAULT_ROW_WIDTH);
                        render_tree_svg(&tree, &StyleSheet::new(&cfg, src.taxonomy()?.as_ref()))
                    }
                }
                Some(c) => {
                    let id = src.upload(c).await?;
                    if json {
                        serde_json::to_string_pretty(&c.tree(&id, &select).await?)? + "\n"
                    } else {
                        c.tree_svg(&id, &select).await?
                    }
                }
            };
            write_out(&output, &text)?;
        }
        Command::Serve { data, port, host, row_width } => {
            if client.is_some() {
                return Err(usage("serve runs a server; drop --server"));
            }
            let bind = SocketAddr::new(host, port);
            eprintln!("serving {} on http://{bind}", data.display());
            tag_service::serve(ServerConfig { data, bind, row_width }).await?;
        }
        Command::Replay { input, diff, output } => {
            let src = Source::read(&input)?;
            let text = read_text(&diff)?;
            let format = src.upload.format.expect("set when read");
            let files = match &client {
                None => {
                    let (base, _) = src.parse()?;
                    let log = DiffLog::from_jsonl(&text)?;
                    let session = Session::replay(base, src.taxonomy()?, &log)?;
                    let (out, report) = serialize(session.document(), format)?;
                    print_report(&report);
                    files_of(out)
                }
                Some(c) => {
                    let id = src.upload(c).await?;
                    c.replay(&id, &text).await?;
                    let resp = c.export(&id, None).await?;
                    print_report(&resp.report);
                    resp.files.into_iter().rev().collect()
                }
            };
            write_document(Some(&output), &files)?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli).await {
        Ok(code) => code,
        Err(e) if e.is::<Usage>() => {
            eprintln!("error: {e}");
            eprintln!("see `tag --help`");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            if let Some(ClientError::Api { code, .. }) = e.downcast_ref::<ClientError>() {
                eprintln!("code: {code}");
            }
            ExitCode::from(1)
        }
    }
}
