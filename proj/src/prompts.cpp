#include "storygraph/extraction.hpp"

#include "storygraph/errors.hpp"

namespace storygraph {

namespace {

// Prompt bodies as written in the Python sources the extractor was
// calibrated with, including their `\n` escapes; decode_escapes() turns
// those into the exact strings sent to the model.
constexpr std::string_view kMainSystemSource = R"prompt(
Knowledge Graph Constructor Instructions \n
## 1. Overview \n
You are a specialized requirements engineer, who understands about scrum framework. Your task is to analyze and extract nodes and relationships from user stories to build a knowledge graph. 
You have to extract as much information as possible without sacrificing accuracy. Do not add any information that is not explicitly in the mentioned user story. \n
## 2. Nodes \n
Nodes represent concepts in a user story. Given a user story, you need to extract: \n
- Persona: there is only one persona node per user story, introduced as 'As a *persona*,'. \n
- Actions: are all verbs in the user story that describe what the persona desires to do (e.g. move on, access, have). Extract the verb only, without modifiers.\n
- Entities: are nouns and each noun must be extracted as a separate entity, even if they seem related or grouped. Include any modifiers that clarify the entity (e.g. library database, domain).  \n
**Consistency**: Ensure you use available types for node labels, you necessarily extract at least 4 nodes: persona, action, entity.\n
**Node IDs**: Never utilize integers as node IDs. Node IDs should be names or human-readable identifiers extracted as found in the user story.\n
**Extract all actions and entities**: capture every action and its corresponding entity.\n
**Separate verbs**: consider each verb as a distinct action and its objects as related entities.\n
## 3. Relationships\n
Relationships represent connections between nodes. The only possible relationships are:\n
- Persona->main action (triggers). \n
- Action->entity (targets). \n
No other relationships are allowed except for the ones above, make sure to create all the possible relationships. \n
## 4. Coreference Resolution \n
**Maintain Entity Consistency**: When extracting entities, it's vital to ensure consistency.\n
If an entity, such as "John Doe", is mentioned multiple times in the text but is referred to by different names or pronouns (e.g., "Joe", "he"), always use the most complete identifier for that entity throughout the knowledge graph. In this example, use "John Doe" as the entity ID.\n'
Remember, the knowledge graph should be coherent and easily understandable, so maintaining consistency in entity references is crucial.\n
## 5. Strict Compliance\n
Adhere to the rules strictly. Non-compliance will result in termination.
## 6. Example \n
'As a user, I want to sync my data so that I can access my information from anywhere.' \n
Extracted Nodes: \n
Persona: ['user'] \n
Action: ['sync', 'access'] \n
Entity: ['data', 'current information', 'anywhere'] \n
Relationships: \n
TRIGGERS: [['user', 'sync']] \n
TARGETS: [['sync', 'data'], ['access', 'current information']] \n)prompt";

constexpr std::string_view kBenefitSystemSource = R"prompt(
    You are a specialized requirements engineer, who understands about scrum framework.\n
    You have to extract as much information as possible without sacrificing accuracy. 
    Do not add any information that is not explicitly in the mentioned user story.\n
    ## Benefit\n
    Extract the benefit sentence of the user story, if it exists.
    The benefit sentence is a sentence typically introduced as 'so that *benefit*', 'in order to *benefit*'.
    ## Examples\n
    if benefit sentence exists: \n  
    input: 'As a user, I want to sync my data, so that I can access my information from anywhere.'\n
    answer: Node(id='I can access my information from anywhere', type='Benefit')\n
    if benefit sentence does not exist: \n
    input: 'As a customer, I want to pay by cash.' \n
    answer: '' \n
    )prompt";

constexpr std::string_view kHumanInstruction =
    "Tip: Make sure to answer in the correct format and do "
    "not include any explanations. "
    "Use the given format to extract information from the "
    "following input: {input}";

// Output-format block for models without function calling. The records are
// appended after it as a JSON array.
constexpr std::string_view kRecordFormatInstructions =
    "## Output Format\n"
    "Function calling is not available. Answer with a JSON array only. "
    "Each element describes one relationship and has exactly these keys: "
    "\"text\" (the input user story), \"head\" (the source node id), "
    "\"head_type\" (Persona or Action), \"relation\" (TRIGGERS or TARGETS), "
    "\"tail\" (the target node id) and \"tail_type\" (Action or Entity).\n"
    "Examples:\n";

// Record 1 is the canonical example; records 2-5 are reconstructions that
// follow its schema.
constexpr std::string_view kFewShotRecordsJson = R"json([
  {"text": "As a business owner, I want to give my inputs on the product development.",
   "head": "business owner", "head_type": "Persona", "relation": "TRIGGERS",
   "tail": "give", "tail_type": "Action"},
  {"text": "As a business owner, I want to give my inputs on the product development.",
   "head": "give", "head_type": "Action", "relation": "TARGETS",
   "tail": "inputs", "tail_type": "Entity"},
  {"text": "As a business owner, I want to give my inputs on the product development.",
   "head": "give", "head_type": "Action", "relation": "TARGETS",
   "tail": "product development", "tail_type": "Entity"},
  {"text": "As a librarian, I want to register new books in the library database, so that members can borrow them.",
   "head": "librarian", "head_type": "Persona", "relation": "TRIGGERS",
   "tail": "register", "tail_type": "Action"},
  {"text": "As a librarian, I want to register new books in the library database, so that members can borrow them.",
   "head": "register", "head_type": "Action", "relation": "TARGETS",
   "tail": "new books", "tail_type": "Entity"}
])json";

std::string decode_escapes(std::string_view src) {
  std::string out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    if (src[i] == '\\' && i + 1 < src.size() && src[i + 1] == 'n') {
      out.push_back('\n');
      ++i;
    } else {
      out.push_back(src[i]);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(Role role) {
  return role == Role::System ? "system" : "human";
}

const std::vector<ExtractionRecord>& few_shot_records() {
  static const std::vector<ExtractionRecord> records = [] {
    auto j = nlohmann::json::parse(kFewShotRecordsJson);
    return records_from_json(j, kFewShotRecordsJson);
  }();
  return records;
}

const PromptTemplate& main_prompt() {
  static const PromptTemplate tmpl{{
      {Role::System, decode_escapes(kMainSystemSource)},
      {Role::Human, std::string(kHumanInstruction)},
  }};
  return tmpl;
}

const PromptTemplate& benefit_prompt() {
  static const PromptTemplate tmpl{{
      {Role::System, decode_escapes(kBenefitSystemSource)},
      {Role::Human, std::string(kHumanInstruction)},
  }};
  return tmpl;
}

const PromptTemplate& main_prompt_without_function_calls() {
  static const PromptTemplate tmpl = [] {
    auto records = nlohmann::json::parse(kFewShotRecordsJson);
    PromptTemplate t;
    t.segments.push_back({Role::System, decode_escapes(kMainSystemSource)});
    t.segments.push_back(
        {Role::System,
         std::string(kRecordFormatInstructions) + records.dump(2) + "\n"});
    t.segments.push_back({Role::Human, std::string(kHumanInstruction)});
    return t;
  }();
  return tmpl;
}

nlohmann::json graph_output_tool() {
  const nlohmann::json node_types = {"Persona", "Action", "Entity", "Benefit"};
  const nlohmann::json rel_types = {"TRIGGERS", "TARGETS"};
  nlohmann::json node = {
      {"type", "object"},
      {"properties",
       {{"id", {{"type", "string"},
                {"description", "Name or human-readable unique identifier."}}},
        {"type", {{"type", "string"}, {"enum", node_types}}}}},
      {"required", {"id", "type"}},
  };
  nlohmann::json rel = {
      {"type", "object"},
      {"properties",
       {{"source_node_id", {{"type", "string"}}},
        {"source_node_type", {{"type", "string"}, {"enum", node_types}}},
        {"target_node_id", {{"type", "string"}}},
        {"target_node_type", {{"type", "string"}, {"enum", node_types}}},
        {"type", {{"type", "string"}, {"enum", rel_types}}}}},
      {"required",
       {"source_node_id", "source_node_type", "target_node_id",
        "target_node_type", "type"}},
  };
  return {
      {"type", "function"},
      {"function",
       {{"name", "DynamicGraph"},
        {"description",
         "Represents a graph document consisting of nodes and relationships."},
        {"parameters",
         {{"type", "object"},
          {"properties",
           {{"nodes", {{"type", "array"}, {"items", node}}},
            {"relationships", {{"type", "array"}, {"items", rel}}}}},
          {"required", {"nodes", "relationships"}}}}}},
  };
}

void check_template(const PromptTemplate& tmpl) {
  std::size_t found = 0;
  for (const auto& seg : tmpl.segments) {
    for (auto pos = seg.text.find(kInputPlaceholder); pos != std::string::npos;
         pos = seg.text.find(kInputPlaceholder, pos + 1)) {
      ++found;
    }
  }
  if (found != 1) {
    throw TemplateError("prompt template must contain exactly one {input} "
                        "placeholder, found " + std::to_string(found));
  }
}

std::vector<ChatMessage> render_prompt(const PromptTemplate& tmpl,
                                       std::string_view story_text) {
  check_template(tmpl);
  std::vector<ChatMessage> out;
  out.reserve(tmpl.segments.size());
  for (const auto& seg : tmpl.segments) {
    std::string text = seg.text;
    if (auto pos = text.find(kInputPlaceholder); pos != std::string::npos) {
      text.replace(pos, kInputPlaceholder.size(), story_text);
    }
    out.push_back({seg.role, std::move(text)});
  }
  return out;
}

}  // namespace storygraph
